use std::path::Path;

use thiserror::Error;

/// Failures split by exit code: bad input is the caller's to fix, runtime
/// failures are ours.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub const EXIT_RUNTIME: i32 = 1;
    pub const EXIT_INPUT: i32 = 2;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => Self::EXIT_INPUT,
            CliError::Runtime(_) => Self::EXIT_RUNTIME,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

/// Configuration errors raised by the core library are input errors;
/// everything else happened during compute.
impl From<evoclust::Error> for CliError {
    fn from(err: evoclust::Error) -> Self {
        match err {
            evoclust::Error::Config(_) => CliError::Input(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
