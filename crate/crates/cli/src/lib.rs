//! Command-line front end: config parsing, run manifests and the `solve`,
//! `sweep` and `verify` commands.

pub mod commands;
pub mod config;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// Numeric failure or a run that did not converge.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<swipt_ne::Error> for CliError {
    fn from(e: swipt_ne::Error) -> Self {
        match e {
            swipt_ne::Error::Numeric(_) => CliError::Numeric(e.to_string()),
            swipt_ne::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("i/o error: {e}"))
    }
}
