//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor extents do not line up for the requested operation.
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    /// An operation was called outside its contract (empty input, i == j, ...).
    #[error("contract violation in {op}: {details}")]
    Contract { op: &'static str, details: String },

    /// Invalid run or experiment configuration.
    #[error("invalid config: {0}")]
    Config(String),

    /// A data file row could not be interpreted.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("duplicate node id: {0}")]
    DuplicateNode(String),

    #[error("edge endpoint not found: {0}")]
    DanglingEdge(String),

    /// Not enough disconnected pairs exist to satisfy a negative-sampling request.
    #[error("negative sampling infeasible: {0}")]
    InfeasibleNegatives(String),

    /// Metric undefined on the given input (e.g. AUC with one class).
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// NaN or Inf appeared where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Checkpoint does not match the expected dimensions or version.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, details: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            details: details.into(),
        }
    }

    pub(crate) fn contract(op: &'static str, details: impl Into<String>) -> Self {
        Error::Contract {
            op,
            details: details.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
