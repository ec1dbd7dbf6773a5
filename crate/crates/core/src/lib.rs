//! Equilibrium portfolios for relative-performance investment games on a
//! finite market, with a direct best-response oracle and perturbation sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod gmap;
pub mod hmap;
pub mod linalg;
pub mod market;
pub mod numeric;
pub mod oracle;
pub mod preferences;
pub mod sweeps;

pub use equilibrium::{EquilibriumProfile, RegimeLabel, RegimeThresholds, Residuals};
pub use error::{Error, Result};
pub use gmap::Game;
pub use hmap::{DualVector, SolverOptions, WealthMatrix, WealthVector};
pub use linalg::SquareMatrix;
pub use market::Market;
pub use oracle::Numeraire;
pub use preferences::{AgentSpec, Family, Preference};
pub use sweeps::{SweepAxis, SweepConfig, SweepReference, SweepTable};
