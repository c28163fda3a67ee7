use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configurable cap (dimension, enumeration size, depth) was exceeded.
    #[error("resource limit exceeded for `{param}`: {value} > {limit}")]
    Resource {
        param: &'static str,
        value: String,
        limit: String,
    },

    #[error("precision: {0}")]
    Precision(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("config {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn resource(
        param: &'static str,
        value: impl ToString,
        limit: impl ToString,
    ) -> Self {
        Error::Resource {
            param,
            value: value.to_string(),
            limit: limit.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
