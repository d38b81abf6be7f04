//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense materialization cap exceeded: {requested} > {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("computation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("singular Gram matrix (smallest pivot {pivot:.3e})")]
    SingularGram { pivot: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("only {bracketed} sparsity levels bracket the boundary (need {required}); unbracketed s: {unbracketed:?}")]
    NotBracketed {
        bracketed: usize,
        required: usize,
        unbracketed: Vec<usize>,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
