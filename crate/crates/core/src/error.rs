use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown wavelet `{0}` (supported: haar, db2)")]
    UnknownWavelet(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate shape {rows}x{cols}: {reason}")]
    DegenerateShape {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("too many levels: requested {requested}, at most {max} feasible for this input")]
    TooManyLevels { requested: usize, max: usize },

    #[error("odd image dimensions {height}x{width}; resize to even dimensions first")]
    OddDimensions { height: usize, width: usize },

    #[error("zero output dimension {0}x{1}")]
    ZeroDimension(usize, usize),

    #[error("could not decode image: {0}")]
    Decode(String),

    #[error("directory not found: {}", .0.display())]
    MissingDirectory(PathBuf),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("single-class input: {0}")]
    SingleClass(&'static str),

    #[error("weight file version mismatch: {0}")]
    VersionMismatch(String),

    #[error("weight file corrupted: {0}")]
    Corrupted(String),

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("i/o error on {}: {source}", path.display())]
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

    /// True for failures caused by bad input (files, flags, data) rather
    /// than a defect in the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::ShapeMismatch(_))
    }
}
