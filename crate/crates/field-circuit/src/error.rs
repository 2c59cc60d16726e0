use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid netlist: {0}")]
    Netlist(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("residual row {row} is not finite at t = {time}")]
    Divergence { row: usize, time: f64 },

    #[error("Newton failed at t = {time} after {iterations} iterations; scaled residual history {history:?}")]
    NewtonFailure {
        time: f64,
        iterations: usize,
        history: Vec<f64>,
    },
}
