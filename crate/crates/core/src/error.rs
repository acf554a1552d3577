use std::path::PathBuf;

/// Errors raised by the filtering, metric and coding routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("image too small: {height}x{width} (need at least {min_height}x{min_width})")]
    TooSmall {
        height: usize,
        width: usize,
        min_height: usize,
        min_width: usize,
    },

    #[error("non-finite value in raster data")]
    NonFinite,

    #[error("zero pivot at row {row} of tridiagonal system")]
    ZeroPivot { row: usize },

    #[error("system with {unknowns} unknowns exceeds the reference solver limit of {limit}")]
    TooLargeForReference { unknowns: usize, limit: usize },

    #[error("{0}")]
    Degenerate(String),

    #[error("coordinate descent did not converge in {iterations} sweeps (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }
}
