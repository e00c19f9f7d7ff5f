use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed image: {0}")]
    MalformedImage(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("image {width}x{height} is too small (need more than {min} pixels per axis)")]
    ImageTooSmall { width: u32, height: u32, min: u32 },

    #[error("intensity offset {offset} would clip the image range")]
    OffsetWouldClip { offset: i32 },

    #[error("mask yields {found} usable region(s), need at least 2")]
    NotEnoughRegions { found: usize },

    #[error("boundary band of region {label} is empty")]
    EmptyBand { label: u32 },

    #[error("forgery geometry violation: {0}")]
    GeometryViolation(String),

    #[error("no valid forgery geometry after {attempts} attempts for sample {index}")]
    SampleExhausted { index: usize, attempts: usize },

    #[error("dataset layout error at {path}: {reason}")]
    LayoutError { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
