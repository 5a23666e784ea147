use std::io;

use thiserror::Error;

/// Errors surfaced by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum GirgError {
    /// A caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// Stored data (compressed file, edge list) is malformed.
    #[error("corrupt data: {0}")]
    Corruption(String),
    /// The model configuration is inconsistent, e.g. the sampler's probability
    /// upper bound was exceeded by an actual edge probability.
    #[error("model configuration error: {0}")]
    ModelConfig(String),
    /// A statistic could not be estimated from the available data.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, GirgError>;

impl GirgError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        GirgError::Usage(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        GirgError::Corruption(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            GirgError::Usage(_) => 2,
            GirgError::Corruption(_) => 3,
            GirgError::ModelConfig(_) => 4,
            GirgError::InsufficientData(_) => 5,
            GirgError::Io(_) => 1,
        }
    }
}
