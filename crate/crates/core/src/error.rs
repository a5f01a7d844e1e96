use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient from player {player}")]
    NonFiniteGradient { player: usize },

    #[error("non-finite field value while probing coordinate {coordinate}")]
    NonFiniteProbe { coordinate: usize },

    #[error("unsupported query: {0}")]
    Unsupported(String),

    /// The state left the finite region (or exceeded the divergence radius).
    /// The partial trajectory up to the last finite state is kept.
    #[error("dynamics diverged at step {step}")]
    Diverged {
        step: usize,
        last_finite: Vec<f64>,
        trajectory: Box<Trajectory>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
