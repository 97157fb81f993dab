use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or inputs; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that fails after the inputs were accepted; exit status 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}
