use std::fmt;

use fmmt::FmmtError;

/// Exit status for malformed invocations and configuration.
pub const EXIT_USAGE: u8 = 1;
/// Exit status for unreadable or invalid data.
pub const EXIT_DATA: u8 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::data(format!("{}: {err}", path.display()))
    }

    pub fn output(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::usage(format!("cannot write {}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FmmtError> for CliError {
    fn from(e: FmmtError) -> Self {
        let code = match e {
            FmmtError::Config(_) => EXIT_USAGE,
            FmmtError::Parse { .. } | FmmtError::Domain(_) => EXIT_DATA,
            FmmtError::Numerical(_) | FmmtError::DegenerateNoise => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
