use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZoError {
    #[error("non-finite parameter at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite loss during estimation (L+ = {plus}, L- = {minus})")]
    NonFiniteEstimate { plus: f64, minus: f64 },

    #[error("non-finite loss {loss} at probe {probe}")]
    NonFiniteProbe { probe: u64, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl ZoError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ZoError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ZoError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = ZoError> = std::result::Result<T, E>;
