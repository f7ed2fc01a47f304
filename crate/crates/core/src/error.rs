use thiserror::Error;

/// Errors produced by the decomposition library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseTfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numerical failure: {message} (achieved tolerance {achieved:e})")]
    Numerical { message: String, achieved: f64 },
}

pub type Result<T> = std::result::Result<T, SparseTfError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SparseTfError::InvalidInput(msg.into()))
}
