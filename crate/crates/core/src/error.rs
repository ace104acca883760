//! Error type shared by every module of the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot normalize a vector with norm {norm:e}")]
    ZeroVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {dim} too small for {count} simplex vertices (need at least {})", count - 1)]
    DimensionTooSmall { count: usize, dim: usize },

    #[error("non-finite intermediate value while evaluating {what}")]
    NumericOverflow { what: &'static str },

    #[error("covariance is degenerate: all points coincide")]
    DegenerateCovariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("cache does not match network: {0}")]
    StaleCache(String),

    #[error("parameter shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("malformed clip {path}: {reason}")]
    MalformedClip { path: PathBuf, reason: String },

    #[error("duplicate clip name {0:?}")]
    DuplicateName(String),

    #[error("dataset has no usable training windows")]
    EmptyDataset,

    #[error("class {0} has no windows")]
    EmptyClass(usize),

    #[error("operation needs at least two classes, dataset has {0}")]
    SingleClassDataset(usize),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("positional encoding dimension {0} is odd")]
    OddDimension(usize),

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),

    #[error("joint count mismatch: {expected} vs {actual}")]
    JointCountMismatch { expected: usize, actual: usize },

    #[error("generated frame set is empty")]
    EmptyGeneratedSet,

    #[error("bad model file: {0}")]
    BadModelFile(String),

    #[error("unknown clip {0:?}")]
    UnknownClip(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
