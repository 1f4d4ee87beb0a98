use thiserror::Error;

use crate::pgm::PgmError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Pgm(#[from] PgmError),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("intensity {value} at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("block grid holds {found} blocks but its layout needs {expected}")]
    BlockCountMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("row range {start}..{end} is outside 0..{available}")]
    RowRange {
        start: usize,
        end: usize,
        available: usize,
    },

    #[error("block {block}: appending {requested} values exceeds capacity {capacity}")]
    CapacityExceeded {
        block: usize,
        requested: usize,
        capacity: usize,
    },

    #[error("block index {index} out of range for {count} blocks")]
    BlockIndex { index: usize, count: usize },

    #[error("sensing row {row} stayed numerically dependent after {attempts} redraws")]
    DependentRow { row: usize, attempts: usize },

    #[error("unsupported block size {0} (must be between 1 and 64)")]
    BlockSize(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("innovation sampling rate {sr_is} leaves no adaptive budget (must be below {limit})")]
    NoAdaptiveBudget { sr_is: f64, limit: f64 },

    #[error("budget {budget} exceeds remaining capacity {capacity}")]
    BudgetExceedsCapacity { budget: usize, capacity: usize },

    #[error("invalid scores: {0}")]
    InvalidScores(String),

    #[error("unknown allocation criterion '{0}'")]
    UnknownCriterion(String),

    #[error("image {height}x{width} is smaller than the {window}x{window} SSIM window")]
    ImageTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
}
