//! Error type shared by every module in the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All the ways a pipeline step can fail.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("pixel index {index} out of range for a cube with {count} pixels")]
    PixelOutOfRange { index: usize, count: usize },

    #[error("band index {index} out of range for a cube with {count} bands")]
    BandOutOfRange { index: usize, count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    InvalidArgument(String),

    /// The target signature coincides with the background mean, so no
    /// detector direction exists. Callers that sample targets treat this as
    /// a signal to draw a replacement pixel.
    #[error("degenerate target: signature equals the background mean")]
    DegenerateTarget,

    #[error("covariance factorization failed after ridge escalation up to {max_ridge:.3e}")]
    RidgeExhausted { max_ridge: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("header line {line}: {message}")]
    HeaderParse { line: usize, message: String },

    #[error("payload is {actual} bytes but the header implies {expected}")]
    PayloadSize { expected: usize, actual: usize },

    #[error("value {value} (band {band}, pixel {pixel}) is not representable as {data_type}")]
    Unrepresentable {
        value: f64,
        band: usize,
        pixel: usize,
        data_type: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::RidgeExhausted { .. } | Error::NumericFailure(_))
    }
}
