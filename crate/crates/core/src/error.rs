use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data row failed validation. Rows are numbered from 1, header excluded.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("timestamp present on some rows only")]
    MixedTimestamps,

    #[error("split tag present on some rows only")]
    MixedSplitTags,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("record {id} has no in-vocabulary tokens")]
    NoInVocabularyTokens { id: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn row(row: usize, message: impl Into<String>) -> Self {
        Error::Row {
            row,
            message: message.into(),
        }
    }
}
