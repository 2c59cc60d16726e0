use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("component {component} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        component: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient column {t_index} is identically zero, relative error undefined")]
    DegenerateColumn { t_index: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model failed at node {node} (p = {point:?}): {message}")]
    ModelFailure {
        node: usize,
        point: Vec<f64>,
        message: String,
    },
}
