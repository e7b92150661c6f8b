use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid run specification: {0}")]
    InvalidSpec(String),

    #[error("out-of-order insertion: event at t={time} before log tail t={tail}")]
    OutOfOrder { time: f64, tail: f64 },

    #[error("query time {query} beyond log horizon {horizon}")]
    BeyondHorizon { query: f64, horizon: f64 },

    #[error("window radius {needed} exceeds the resource cap {cap}")]
    WindowCapExceeded { needed: f64, cap: f64 },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Resource errors get a distinct process exit code.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::WindowCapExceeded { .. })
    }
}
