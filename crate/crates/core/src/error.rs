use thiserror::Error;

/// Errors produced by the special-function core and the metric routines
/// built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A series or iteration did not reach its tolerance within the term cap.
    #[error("{what} did not converge after {terms} terms (partial value {partial:e})")]
    Convergence {
        what: &'static str,
        partial: f64,
        terms: usize,
    },

    /// No vertical contour separates the left and right pole families.
    #[error("no admissible Mellin-Barnes contour: {0}")]
    ContourInfeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
