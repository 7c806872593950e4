//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tracking, parsing and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box: {reason}")]
    InvalidBox { reason: String },

    #[error("invalid embedding: {reason}")]
    InvalidEmbedding { reason: String },

    #[error("embedding has zero norm")]
    ZeroNormEmbedding,

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("appearance gallery is empty")]
    EmptyGallery,

    #[error("cost matrix shape mismatch: {a_rows}x{a_cols} vs {b_rows}x{b_cols}")]
    ShapeMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    #[error("out-of-order frame index: frame {got} after frame {last}")]
    OutOfOrderFrame { last: u32, got: u32 },

    #[error("frame {frame}: detection without embedding but the configured paradigm requires appearance features")]
    MissingEmbedding { frame: u32 },

    #[error("line {line}: {message} (field: {field})")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unknown config key '{key}'")]
    UnknownConfigKey { key: String },

    #[error("config key '{key}' out of range: legal range is {range}, got {value}")]
    ConfigRange {
        key: String,
        range: String,
        value: String,
    },

    #[error("embedding sidecar references detection (frame {frame}, index {det_index}) that does not exist")]
    DanglingSidecarRef { frame: u32, det_index: usize },

    #[error("duplicate embedding sidecar row for (frame {frame}, index {det_index})")]
    DuplicateSidecarRow { frame: u32, det_index: usize },

    #[error("duplicate id {id} in frame {frame}")]
    DuplicateId { frame: u32, id: u64 },

    #[error("no embeddings were recorded; representation report is empty")]
    EmptyReport,

    #[error("invalid scenario config: {reason}")]
    InvalidScenario { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
