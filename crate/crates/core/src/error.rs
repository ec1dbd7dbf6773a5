use thiserror::Error;

use crate::numeric::RootError;

/// Errors produced by the equilibrium library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid wealth vector: {0}")]
    InvalidWealth(String),

    #[error("invalid numeraire: {0}")]
    InvalidNumeraire(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),

    #[error("root finder failed: {0}")]
    Root(#[from] RootError),

    #[error("matrix is singular within pivot tolerance")]
    SingularMatrix,

    #[error(
        "Newton solver stopped after {iterations} iterations with residual {residual:.3e}{}",
        if *.stalled { " (line search stalled)" } else { "" }
    )]
    MaxIterationsExceeded {
        iterations: usize,
        best: Vec<f64>,
        residual: f64,
        stalled: bool,
    },

    #[error("Jacobian of h is singular at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("verification failed: foc residual {foc:.3e}, budget residual {budget:.3e}")]
    VerificationFailed { foc: f64, budget: f64 },

    #[error("explicit and LU inverse Jacobians disagree by {0:.3e}")]
    InconsistentInverse(f64),

    #[error("wealth must be strictly positive (atom {atom}, agent {agent}: {value})")]
    NonPositiveWealth { atom: usize, agent: usize, value: f64 },

    #[error("operation requires {0}")]
    Unsupported(&'static str),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
