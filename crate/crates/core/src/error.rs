use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("POVM effects do not sum to the identity (residual {residual:e})")]
    Incomplete { residual: f64 },

    #[error("conditioning on a null event (probability {probability:e})")]
    NullEvent { probability: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("states not diverse enough: condition number {condition:e} exceeds {limit:e}")]
    InsufficientSpan { condition: f64, limit: f64 },

    #[error("singular Gram matrix (condition number {condition:e})")]
    SingularGram { condition: f64 },

    #[error("probability mass {mass:e} reached the grid boundary")]
    BoundaryLeak { mass: f64 },

    #[error("no jump channel applicable at t = {time}")]
    NoJumpChannel { time: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
