use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate pivot block (rows {indices:?})")]
    Degenerate { indices: Vec<usize> },

    #[error("cross approximation did not converge at step {step}: best relative accuracy {achieved:e}")]
    Unconverged { step: usize, achieved: f64 },

    #[error("non-finite value {value} at x = {x}, t = {t}")]
    NonFinite { x: f64, t: f64, value: f64 },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("convergence order undefined: {0}")]
    UndefinedOrder(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
