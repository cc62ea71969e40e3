use std::path::PathBuf;

use crate::grid::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite values after {0}")]
    NonFinite(&'static str),

    #[error("cell {cell} generation {generation}: {source}")]
    Training {
        cell: CellId,
        generation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's inputs rather than by a run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_) | Error::Dimension(_))
    }
}
