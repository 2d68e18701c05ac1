use std::path::{Path, PathBuf};

use thiserror::Error;

/// Command failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing artifact {path}: {reason}")]
    Missing { path: PathBuf, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] scma_ntn::Error),
}

impl CliError {
    pub fn missing(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Missing {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }

    /// 2 for configuration problems, 3 for missing or unreadable inputs,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use scma_ntn::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Missing { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Corrupt(_) | E::Version(_) => 3,
                E::ZeroNoise | E::NonFinite(_) | E::RankDeficient { .. } | E::Uninitialized => 4,
                _ => 2,
            },
        }
    }
}
