use thiserror::Error;

#[derive(Debug, Error)]
pub enum AemError {
    /// Invalid configuration or input that cannot be processed at all.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a documented precondition (shape mismatch, wrong mode).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AemError {
    pub fn config(msg: impl Into<String>) -> Self {
        AemError::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        AemError::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, AemError>;
