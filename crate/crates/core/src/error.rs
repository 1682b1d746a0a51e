use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The covariance matrix is not a physical quantum covariance.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// A mode label does not address the register it is used on.
    #[error("mode {index} out of range for a {num_modes}-mode register")]
    ModeOutOfRange { index: usize, num_modes: usize },

    #[error("unknown gate descriptor `{0}`")]
    UnknownGate(String),

    /// A checked invariant failed during a protocol run.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
