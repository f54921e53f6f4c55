use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {index}: signed area {area:e}")]
    DegenerateElement { index: usize, area: f64 },

    #[error("element count overflow: {0}")]
    Capacity(String),

    #[error("invalid time partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("matrix is numerically singular: {0}")]
    NumericallySingular(String),

    #[error("iteration did not converge after {iterations} steps (estimate {estimate:e})")]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FemError {
    fn from(err: std::io::Error) -> Self {
        FemError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FemError>;
