//! Runner-level error taxonomy, mapped onto process exit codes: bad config
//! or arguments (1), bad data or artifacts (2), and everything that should
//! never happen (3).

use deliverytime_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl RunnerError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunnerError::Validation(_) => 1,
            RunnerError::Data(_) => 2,
            RunnerError::Internal(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunnerError>;

/// Classify a core error raised while working on user-supplied data or
/// artifacts. Parameter problems are validation, contract breaches are bugs,
/// and everything else traces back to the input.
pub fn classify(stage: &str, e: CoreError) -> RunnerError {
    let msg = format!("{stage}: {e}");
    match e {
        CoreError::InvalidParams(_) => RunnerError::Validation(msg),
        CoreError::Contract(_) | CoreError::Serde(_) => RunnerError::Internal(msg),
        _ => RunnerError::Data(msg),
    }
}

pub fn validation(msg: impl Into<String>) -> RunnerError {
    RunnerError::Validation(msg.into())
}

pub fn data(msg: impl Into<String>) -> RunnerError {
    RunnerError::Data(msg.into())
}

pub fn internal(msg: impl Into<String>) -> RunnerError {
    RunnerError::Internal(msg.into())
}
