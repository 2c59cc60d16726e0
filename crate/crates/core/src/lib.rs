//! Polynomial chaos toolkit for uncertainty quantification of time-dependent
//! models with uniformly distributed parameters.
//!
//! * [`space`]: parameter box, reference map, expected values
//! * [`basis`]: multi-indices and the normalized Legendre tensor basis
//! * [`quadrature`]: Stroud degree-5 and tensor Gauss-Legendre rules
//! * [`collocation`]: chaos coefficients by quadrature projection
//! * [`sparsify`]: minimal index sets meeting a relative L2 tolerance
//! * [`pod`]: SVD of the coefficient snapshots and the rotated basis

pub mod basis;
pub mod collocation;
pub mod error;
pub mod pod;
pub mod quadrature;
pub mod space;
pub mod sparsify;

pub use basis::{legendre_1d, IndexSet, MultiIndex};
pub use collocation::{
    collocate, project, solve_nodes, CoefficientTrajectory, ModelError, NodeSolutions,
    ParametricModel,
};
pub use error::{Error, Result};
pub use pod::{pod, pod_error_curve, PodBasis, ReducedTrajectory};
pub use quadrature::{stroud5, tensor_gauss, CubatureRule};
pub use space::{ParameterSpace, UniformBox};
pub use sparsify::{global_set, optimal_set, sparsity_error, sweep, SparsityReport};
