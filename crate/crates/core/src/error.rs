use std::path::PathBuf;

use crate::compression::BackendKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: row {row}: {message}", path.display())]
    Csv { path: PathBuf, row: u64, message: String },

    #[error("{}: row {row}: empty text", path.display())]
    EmptyText { path: PathBuf, row: u64 },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("class `{class}` has {available} samples but {requested} were requested")]
    InsufficientSamples {
        class: String,
        available: usize,
        requested: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0} backend cannot train dictionaries")]
    UnsupportedBackend(BackendKind),

    #[error("{kind} backend failed: {message}")]
    Backend { kind: BackendKind, message: String },

    #[error("degenerate corpus: {0}")]
    Degenerate(String),

    #[error("no training samples labelled `{0}` or `{1}`")]
    EmptyGold(String, String),

    #[error("class `{class}`: {source}")]
    Class {
        class: String,
        #[source]
        source: Box<Error>,
    },

    #[error("gold sample {index}: {source}")]
    GoldSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid compressor bundle: {0}")]
    Bundle(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_class(class: &str, source: Error) -> Self {
        Error::Class {
            class: class.to_owned(),
            source: Box::new(source),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::UnknownColumn(_)
            | Error::InsufficientSamples { .. }
            | Error::InvalidInput(_) => 2,
            _ => 3,
        }
    }
}
