use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A malformed input record, located by its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Record {
        path: PathBuf,
        #[source]
        source: RecordError,
    },

    #[error("{0}")]
    Parse(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("invariant breached: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 validation, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Contract(_) => 1,
            Error::Io { .. } | Error::Record { .. } | Error::Parse(_) | Error::UnknownNode(_) => 2,
            Error::Invariant(_) => 3,
        }
    }
}
