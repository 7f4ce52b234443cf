use std::path::{Path, PathBuf};

use procure_core::env::EnvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Assumption(EnvError),
    #[error("mechanism mismatch: {0}")]
    Mismatch(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Write { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Verification(_) => 5,
        }
    }

    pub fn missing(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        CliError::Write {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
