use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent scenario or flags.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric routine failed where no per-row fallback exists.
    #[error("numeric failure: {0}")]
    Numeric(#[from] relaylink::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

/// Summary of a sweep or validation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Rows or checks whose analytic value could not be computed.
    pub numeric_failures: usize,
    /// Validation checks outside their limit.
    pub failed_checks: usize,
}

impl Outcome {
    /// 0 on success, 2 on any numeric failure, 3 on failed checks.
    pub fn exit_code(&self) -> i32 {
        if self.numeric_failures > 0 {
            2
        } else if self.failed_checks > 0 {
            3
        } else {
            0
        }
    }
}
