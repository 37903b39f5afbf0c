use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {reason}")]
    ConfigFile { path: PathBuf, reason: String },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("config key {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] wpb_core::Error),
    #[error("I/O error on {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

impl CliError {
    pub fn config(key: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            reason: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigFile { .. } | CliError::Parse(_) | CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
