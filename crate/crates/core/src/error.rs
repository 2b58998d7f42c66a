use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("{key} = {value} is out of range: {reason}")]
    OutOfRange {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("inconsistent feedback parameters: S = {s}, but exp(-kappa_ext * tau) = {implied}")]
    InconsistentFeedback { s: f64, implied: f64 },

    #[error("invalid mode grid: {0}")]
    Grid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invariant violation at t = {t} fs: {what}")]
    InvariantViolation { t: f64, what: String },

    #[error("delay history underflow: buffer holds {len} samples, needs {needed}")]
    HistoryUnderflow { len: usize, needed: usize },

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("bad override `{0}`, expected key=value")]
    Override(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
