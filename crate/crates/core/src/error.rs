//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwionError {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A file could not be parsed as a run/scan/config document.
    #[error("format error: {0}")]
    Format(String),

    /// An iterative numerical procedure failed to converge or broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SwionError {
    pub fn input(msg: impl Into<String>) -> Self {
        SwionError::Input(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        SwionError::Format(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        SwionError::Numerical(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SwionError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SwionError>;
