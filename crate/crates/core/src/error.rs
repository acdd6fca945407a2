use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KnoopError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column {index} ({label}) is all zeros and cannot be normalized")]
    ZeroColumn { index: usize, label: String },

    #[error("column {index} ({label}) has zero variance")]
    ConstantColumn { index: usize, label: String },

    #[error("matrix is not positive semi-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<KnoopError>,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KnoopError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KnoopError::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        KnoopError::DimensionMismatch(msg.into())
    }

    /// Wraps an error with the name of the stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        KnoopError::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = KnoopError> = std::result::Result<T, E>;
