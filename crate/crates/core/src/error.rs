use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("duplicate vocabulary name {0:?}")]
    DuplicateName(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vocabulary version mismatch: expected {expected}, got {actual}")]
    VocabMismatch { expected: String, actual: String },
    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("url has no hostname: {0}")]
    NoHostname(String),
    #[error("invalid url {url:?}: {msg}")]
    InvalidUrl { url: String, msg: String },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("label store: {0}")]
    Store(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
