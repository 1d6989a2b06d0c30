use std::process::ExitCode;

use noma_meta::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Infeasible(_) => ExitCode::from(4),
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => ExitCode::from(1),
        }
    }

    /// Library errors raised while building a configuration are the
    /// caller's fault.
    pub fn from_setup(e: Error) -> Self {
        match e {
            Error::InfeasibleAllocation { .. } | Error::InfeasibleTmr { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            Error::InfeasibleAllocation { .. } | Error::InfeasibleTmr { .. } => {
                CliError::Infeasible(e.to_string())
            }
            Error::Domain(_) | Error::NumericFailure(_) | Error::InvalidMoments { .. } => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
