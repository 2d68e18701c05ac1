use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("codebook for user {user} is not normalized (mean energy {energy})")]
    NotNormalized { user: usize, energy: f64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} is not divisible by {1}")]
    NotDivisible(usize, usize),
    #[error("search space of {0} joint hypotheses exceeds the enumeration limit")]
    SearchSpaceTooLarge(u64),
    #[error("noise variance must be positive for soft detection")]
    ZeroNoise,
    #[error("parity-check matrix is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("unknown operating point {0:?}")]
    UnknownOperatingPoint(String),
    #[error("batch norm running statistics are uninitialized")]
    Uninitialized,
    #[error("standardizer has not been calibrated")]
    Uncalibrated,
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("corrupt weights file: {0}")]
    Corrupt(String),
    #[error("unsupported weights file version {0}")]
    Version(u32),
    #[error("numerical failure: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
