use std::path::PathBuf;

/// Errors raised while reading or writing pipeline files.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: usize, message: String },
    #[error("{origin}:{line}: duplicate pair ({user}, {item})")]
    DuplicatePair { origin: String, line: usize, user: String, item: String },
    #[error("{origin}:{line}: negative relevance {relevance}")]
    NegativeRelevance { origin: String, line: usize, relevance: f64 },
    #[error("unknown {what} {id:?}")]
    UnknownId { what: &'static str, id: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Core(#[from] tdiv_core::Error),
}

impl DataError {
    pub(crate) fn parse(origin: &str, line: usize, message: impl Into<String>) -> Self {
        DataError::Parse { origin: origin.to_string(), line, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;
