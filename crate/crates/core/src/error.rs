use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {op} got {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no events")]
    NoEvents,

    #[error("user {user} has {len} interactions, at least 3 are needed for a chronological split")]
    SequenceTooShort { user: String, len: usize },

    #[error("no training instances: every train sequence is shorter than L + T = {needed}")]
    NoInstances { needed: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("index {index} out of range for {what} (valid range 0..{len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("unknown user id {id:?}; valid ids are {valid}")]
    UnknownUser { id: String, valid: String },

    #[error("ground-truth item {0} is not among the candidates")]
    MissingGroundTruth(usize),

    #[error("attention cache missing: attend must run before attend_backward")]
    MissingCache,

    #[error("checkpoint does not match the prepared data: {0}")]
    CheckpointMismatch(String),

    #[error("malformed artifact: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
