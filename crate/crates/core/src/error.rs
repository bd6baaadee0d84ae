use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("singular matrix: pivot {pivot:e} at column {column} below threshold {threshold:e}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    /// The implicit solve of a time step did not converge.
    #[error(
        "step {step} failed: Picard iteration did not converge after {iterations} iterations \
         (last increment {increment:e})"
    )]
    StepFailure {
        step: usize,
        iterations: usize,
        increment: f64,
    },

    #[error("requested rank {requested} exceeds attained rank {attained}")]
    RankExceeded { requested: usize, attained: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
