use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] trajent::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{failed} of {total} properties failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}
