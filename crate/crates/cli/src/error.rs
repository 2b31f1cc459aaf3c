use std::fmt;

use jaynes_qmp::Error;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid input (exit 2).
    Parse(String),
    /// File system failure (exit 2).
    Io(String),
    /// A numerical routine failed (exit 3).
    Numerical(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "invalid input: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::NotHermitian { .. }
            | Error::InvalidDensity { .. }
            | Error::InvalidSpec(_)
            | Error::InvalidTime { .. }
            | Error::NotIntegralOfMotion(_)
            | Error::NotConstantOfMotion { .. } => CliError::Parse(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
