//! Crate-wide error type.

use thiserror::Error;

use crate::haar::Viewpoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic { expected: u32, found: u32 },

    #[error("truncated IDX payload: expected {expected} bytes, found {found}")]
    IdxTruncated { expected: usize, found: usize },

    #[error("IDX pair mismatch: {images} images vs {labels} labels")]
    IdxPairing { images: usize, labels: usize },

    #[error("unsupported IDX image size {rows}x{cols} (expected 28x28)")]
    IdxImageSize { rows: usize, cols: usize },

    #[error("label {0} out of range [0,9]")]
    LabelRange(u8),

    #[error("bad image dimensions: expected {expected} pixels, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("gaze ({row},{col}) outside the {rows}x{cols} gaze grid")]
    GazeBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("inconsistent pyramid structure: {0}")]
    Structure(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown viewpoint ({},{},{})", .0.level, .0.row, .0.col)]
    ViewpointLookup(Viewpoint),

    #[error("model file version mismatch: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },

    #[error("model file corrupted: {0}")]
    Corruption(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("action set exhausted: no gaze available")]
    Exhausted,

    #[error("bad configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
