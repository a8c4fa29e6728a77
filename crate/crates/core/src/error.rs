use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("video has no frames")]
    EmptyVideo,
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    BadVersion(u16),
    #[error("stream truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("corrupt stream at byte {offset}: {reason}")]
    CorruptStream { offset: usize, reason: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
    #[error("cannot sample {requested} P-frames from {available}")]
    InvalidSampleCount { requested: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for every variant that describes a malformed serialized stream.
    pub fn is_stream_corruption(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::BadVersion(_)
                | Error::Truncated { .. }
                | Error::CorruptStream { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
