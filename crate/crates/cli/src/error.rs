use sysrisk_core::Error as CoreError;
use thiserror::Error;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("incompatible request: {0}")]
    Incompatible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Numeric(_) => 3,
            Self::Incompatible(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Parse { .. }
            | CoreError::InvalidSpace(_)
            | CoreError::InvalidParameter(_)
            | CoreError::BadGroupStructure(_) => Self::Parse(msg),
            CoreError::Infeasible
            | CoreError::Unbounded
            | CoreError::NoConvergence { .. }
            | CoreError::NoBracket { .. }
            | CoreError::NumericalBreakdown(_)
            | CoreError::InvalidDensity(_) => Self::Numeric(msg),
            CoreError::DimensionMismatch { .. }
            | CoreError::MismatchedSpace
            | CoreError::NotDifferentiable(_)
            | CoreError::Unsupported(_)
            | CoreError::ScaleTooLarge(_) => Self::Incompatible(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
