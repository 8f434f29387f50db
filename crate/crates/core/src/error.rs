use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decode failure in {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported PNG format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("encode failure for {path}: {reason}")]
    Encode { path: PathBuf, reason: String },

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {actual_w}x{actual_h}")]
    DimensionMismatch { expected_w: usize, expected_h: usize, actual_w: usize, actual_h: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("expected a single-channel image, got {0} channels")]
    NotGrayscale(usize),

    #[error("no boundary information: every pixel is masked")]
    NoBoundary,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("refinement provider failed: {0}")]
    Provider(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage { stage, source: Box::new(source) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
