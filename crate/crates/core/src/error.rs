use thiserror::Error;

use crate::grid::Snapshot;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid preset: {0}")]
    Preset(String),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("CFL violation at step {step}: cell {cell} reached {value:e}")]
    CflViolation { step: u64, cell: usize, value: f64 },

    #[error("non-finite state at t = {}; last good snapshot retained", last_good.t)]
    NonFinite { last_good: Box<Snapshot> },

    #[error("test function support violation: {0}")]
    Support(String),

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
