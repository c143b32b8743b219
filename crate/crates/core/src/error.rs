use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The variants are grouped so the CLI can map them onto exit codes: configuration
/// problems exit with 1, everything touching data exits with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is singular; use a positive covariance ridge")]
    SingularCovariance,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("invalid value for parameter `{name}`: {message}")]
    InvalidParam { name: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user configuration rather than data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownParam(_) | Error::InvalidParam { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
