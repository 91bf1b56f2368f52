use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time regression: sample at {t} ms precedes last sample at {last} ms")]
    TimeRegression { last: f64, t: f64 },

    /// The gaze stream ends before the early-trigger lookahead window closes.
    #[error(
        "indeterminate early trigger: pinch at {pinch_t} ms needs frames up to {needed_until} ms, stream ends at {available_until} ms"
    )]
    IndeterminateEarly { pinch_t: f64, needed_until: f64, available_until: f64 },

    #[error("empty metric: {0}")]
    EmptyMetric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unbalanced design, missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),

    #[error("{file}:{line}: field `{field}`: {message}")]
    Schema { file: String, line: usize, field: String, message: String },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unsupported schema_version {0} (expected {expected})", expected = crate::io::SCHEMA_VERSION)]
    UnsupportedSchema(u32),

    #[error("refusing to write session: {0}")]
    InvariantViolation(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
