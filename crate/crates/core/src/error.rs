use thiserror::Error;

/// Errors raised across the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("unsupported degree {0}")]
    UnsupportedDegree(usize),
    #[error("quadrature point count {0} outside 1..=10")]
    QuadratureOrder(usize),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular matrix (pivot near row {pivot})")]
    Singular { pivot: usize },
    #[error("linear solve residual {residual:e} above tolerance {tol:e}")]
    SolveResidual { residual: f64, tol: f64 },
    #[error("non-positive value: {0}")]
    NonPositive(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("step {step} diverged: {what}")]
    Diverged { step: usize, what: String },
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
