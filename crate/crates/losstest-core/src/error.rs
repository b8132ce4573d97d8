//! Error type shared by every module in the crate.

use alloc::string::String;

/// Everything that can go wrong when validating data or running a test.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A dataset failed validation (non-finite value, bad label, empty).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A feature subset is empty, unsorted, duplicated, or out of range.
    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    /// Array dimensions do not line up.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Fewer samples than an operation needs.
    #[error("too few samples: need at least {min}, got {n}")]
    TooFewSamples { n: usize, min: usize },

    /// Asked for more neighbors than there are training points.
    #[error("insufficient neighbors: k = {k} exceeds n = {n}")]
    InsufficientNeighbors { k: usize, n: usize },

    /// An argument is outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configured task does not match the dataset's label kind.
    #[error("task mismatch: config says {config}, data is {data}")]
    TaskMismatch {
        config: &'static str,
        data: &'static str,
    },

    /// A scenario specification is internally inconsistent.
    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = core::result::Result<T, Error>;
