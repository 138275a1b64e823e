//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by loading, validation, fitting, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed row or token in an input file; `line` is 1-based and
    /// counts the header.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown item id `{0}`")]
    UnknownItem(String),

    #[error("unknown context id `{0}`")]
    UnknownContext(String),

    #[error("unknown annotator id `{0}`")]
    UnknownAnnotator(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero probability mass: {0}")]
    ZeroMass(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("key sets differ: {0}")]
    KeyMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
