use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("group {group} has no edges at stage n = {n}")]
    EmptyGroup { group: usize, n: usize },

    /// A non-positive pivot was met during elimination.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("rate undefined: {0}")]
    UndefinedRate(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
