use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimator rig.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {class} out of range for a {num_classes}-class model")]
    InvalidClass { class: usize, num_classes: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: non-finite loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("dimension {dim} exceeds exact enumeration limit of {limit}")]
    EnumerationTooLarge { dim: usize, limit: usize },

    #[error("could not place {wanted} points after {attempts} attempts (placed {placed})")]
    Infeasible {
        wanted: usize,
        placed: usize,
        attempts: usize,
    },

    #[error("malformed checkpoint at line {line}, column {column}: {message}")]
    MalformedCheckpoint {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent checkpoint: {0}")]
    InconsistentCheckpoint(String),

    #[error("malformed dataset at line {line}: {message}")]
    MalformedDataset { line: usize, message: String },

    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },

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

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
