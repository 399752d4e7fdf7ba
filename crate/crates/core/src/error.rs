use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain an evaluator supports.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: {what} (expected {expected}, got {got})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A coefficient exceeded the blow-up threshold or became non-finite.
    #[error("numerical blow-up at step {step}: coefficient {value:e} (mode {mode})")]
    BlowUp { step: usize, mode: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error at line {line} ({key}): {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
