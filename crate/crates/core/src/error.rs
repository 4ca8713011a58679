use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    /// Referential or structural problem inside a dataset.
    #[error("dataset: {0}")]
    Dataset(String),

    #[error("polygon {index}: {reason}")]
    InvalidPolygon { index: usize, reason: String },

    #[error("RLE counts sum to {sum}, expected {expected} ({height}x{width})")]
    RleSize {
        sum: u64,
        expected: u64,
        height: u32,
        width: u32,
    },

    #[error("compressed RLE string: {0}")]
    RleString(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("item {index}: {source}")]
    Item {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("sample stream is closed")]
    Closed,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Whether this error stems from bad input (config, flags, input files) rather
    /// than a failure while producing output.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config { .. }
            | Error::InvalidArgument(_)
            | Error::Json { .. }
            | Error::Dataset(_)
            | Error::InvalidPolygon { .. }
            | Error::RleSize { .. }
            | Error::RleString(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Item { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
