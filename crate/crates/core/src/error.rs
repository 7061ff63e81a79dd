use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {left} and {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state error: {0}")]
    State(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected K={expected}, found K={found}")]
    Dimension { expected: usize, found: usize },

    #[error("checkpoint {path}: {kind}")]
    Checkpoint {
        path: PathBuf,
        kind: CheckpointErrorKind,
    },

    #[error(
        "non-finite loss at epoch {epoch}, iteration {iteration} ({phase} phase): \
         sensing={sensing}, comms={comms}, lr={lr}"
    )]
    NonFiniteLoss {
        epoch: usize,
        iteration: usize,
        phase: &'static str,
        sensing: f64,
        comms: f64,
        lr: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckpointErrorKind {
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("cannot read file: {0}")]
    Unreadable(String),
    #[error("file truncated")]
    Truncated,
    #[error("checksum mismatch")]
    Checksum,
    #[error("malformed header: {0}")]
    Header(String),
}

pub(crate) fn shape_err(op: &'static str, left: impl Into<String>, right: impl Into<String>) -> Error {
    Error::Shape {
        op,
        left: left.into(),
        right: right.into(),
    }
}
