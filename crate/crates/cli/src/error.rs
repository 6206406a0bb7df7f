use std::path::Path;

use analog_dist::Error as CoreError;

/// Exit codes: 2 validation, 3 numeric, 4 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::NonFinite { .. }
            | CoreError::Overflow(_)
            | CoreError::CovarianceCollapse { .. }
            | CoreError::DegenerateDistances
            | CoreError::ZeroDistance { .. } => CliError::Numeric(msg),
            CoreError::Io { .. } | CoreError::Format { .. } | CoreError::Csv(_) => CliError::Io(msg),
            CoreError::TooLarge { .. }
            | CoreError::NotEnoughAnalogs { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidParameter(_) => CliError::Validation(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
