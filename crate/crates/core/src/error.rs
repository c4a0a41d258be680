use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("no transition direction: (P/M)·d vanishes")]
    NoTransitionDirection,

    #[error("adiabatic surfaces {0} and {1} are degenerate")]
    Degenerate(usize, usize),

    #[error("coordinates outside the field domain: {0}")]
    OutOfDomain(String),

    #[error("coupling direction is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("potential is not confining: Metropolis walker ran away")]
    NonConfining,

    #[error("trajectory {index} failed: {reason}")]
    TrajectoryFailed { index: usize, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
