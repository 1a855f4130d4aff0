use thiserror::Error;

use crate::tensor::{Dims, EntryIndex};

pub type Result<T> = std::result::Result<T, LftError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LftError {
    #[error("invalid dimensions {0}: every mode must have at least one slice")]
    InvalidDims(Dims),

    #[error("duplicate entry at index {0}")]
    DuplicateIndex(EntryIndex),

    #[error("index {index} is out of range for dims {dims}")]
    IndexOutOfRange { index: EntryIndex, dims: Dims },

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: EntryIndex, value: f64 },

    #[error("too many entries: {count} exceeds capacity {capacity}")]
    TooManyEntries { count: usize, capacity: u128 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rank must be at least 1")]
    ZeroRank,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: model has dims {model}, data has dims {data}")]
    DimensionMismatch { model: Dims, data: Dims },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch}, step {step} (entry {index}): non-finite factor")]
    Divergence {
        epoch: usize,
        step: usize,
        index: EntryIndex,
    },

    #[error("split produced an empty {0} set")]
    EmptySplit(&'static str),
}
