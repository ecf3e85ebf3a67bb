use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: String, message: String },
    #[error("empty batch")]
    EmptyBatch,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
