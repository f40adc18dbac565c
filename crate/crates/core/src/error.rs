use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid mode {0}, expected 1, 2 or 3")]
    InvalidMode(usize),

    #[error("index {index} out of range for mode-{mode} of size {size}")]
    IndexOutOfRange {
        mode: usize,
        index: usize,
        size: usize,
    },

    #[error("rank {rank} out of range 1..={max} for mode-{mode}")]
    RankOutOfRange {
        mode: usize,
        rank: usize,
        max: usize,
    },

    #[error("non-finite value at linear index {0}")]
    NonFinite(usize),

    #[error("singular value decomposition did not converge ({0})")]
    Decomposition(String),

    #[error("transform for frame {frame} is singular or ill-conditioned (condition number {condition:e})")]
    SingularTransform { frame: usize, condition: f64 },

    #[error("target compression ratio {target} is unreachable within tolerance {delta}")]
    UnreachableTarget { target: f64, delta: f64 },

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("error evaluation failed for (v={v}, f={f}): {source}")]
    Evaluation {
        v: usize,
        f: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by reading or writing files and streams.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Stream(_))
            || matches!(self, Error::Csv(e) if e.is_io_error())
    }

    /// True when a requested compression target cannot be met.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::UnreachableTarget { .. } | Error::EmptyCandidates
        )
    }
}
