//! Configuration, caching and the stage commands behind the `pcuq` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod setup;

pub use commands::{pipeline, pod_stage, project_stage, solve, sparsify_stage, SolveReport};
pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use setup::Setup;
