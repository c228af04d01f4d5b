use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps variants onto process exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("duplicate comment id {0:?}")]
    DuplicateId(String),

    #[error("cycle detected among comments {0:?}")]
    Cycle(Vec<String>),

    #[error("inconsistent tree: {0}")]
    Inconsistent(String),

    #[error("configuration error at {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing upstream artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("remote transport error after {attempts} attempt(s): {reason}")]
    Transport { attempts: usize, reason: String },

    #[error("remote protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 missing input, 3 bad config,
    /// 4 remote-service failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingArtifact(_) => 2,
            Error::Config { .. } => 3,
            Error::Transport { .. } | Error::Protocol(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
