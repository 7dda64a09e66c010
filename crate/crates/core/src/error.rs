use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("riccati solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("robots {a} and {b} occupy the same position at ({x}, {y})")]
    DegenerateGeometry { a: usize, b: usize, x: f64, y: f64 },

    #[error("invalid decision: {0}")]
    InvalidDecision(String),

    #[error("episode exceeded horizon {horizon} with {outstanding} tasks outstanding (clock {clock})")]
    Livelock {
        horizon: f64,
        clock: f64,
        outstanding: usize,
    },

    #[error("all robots are masked")]
    AllMasked,

    #[error("non-finite loss during update (policy {policy_loss}, value {value_loss})")]
    NonFiniteLoss { policy_loss: f64, value_loss: f64 },

    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset parse error at line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
