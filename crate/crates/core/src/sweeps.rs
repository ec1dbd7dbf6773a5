//! Perturbation sweeps: distance of the solved equilibrium to a reference
//! profile as a perturbation parameter shrinks.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{crra_closed_form, no_competition_solve, solve, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::gmap::Game;
use crate::hmap::{SolverOptions, WealthMatrix, WealthVector};
use crate::market::Market;
use crate::preferences::{Family, Preference};

/// Slack allowed when checking that distances do not increase.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Sine-perturbation amplitude of every agent.
    RraPerturbation,
    /// Common competition weight.
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepReference {
    CrraClosedForm,
    NoCompetition,
}

/// A validated sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    base_game: Game,
    market: Market,
    x0: WealthVector,
    axis: SweepAxis,
    grid: Vec<f64>,
    reference: SweepReference,
    solver: SolverOptions,
}

impl SweepConfig {
    pub fn new(
        base_game: Game,
        market: Market,
        x0: WealthVector,
        axis: SweepAxis,
        grid: Vec<f64>,
        reference: SweepReference,
    ) -> Result<Self> {
        match (axis, reference) {
            (SweepAxis::RraPerturbation, SweepReference::CrraClosedForm)
            | (SweepAxis::Lambda, SweepReference::NoCompetition) => {}
            _ => {
                return Err(Error::InvalidSweep(format!(
                    "axis {axis:?} is incompatible with reference {reference:?}"
                )))
            }
        }
        if grid.is_empty() {
            return Err(Error::InvalidSweep("grid is empty".into()));
        }
        if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSweep(format!("grid value {v} is not a nonnegative number")));
        }
        if let Some(w) = grid.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSweep(format!(
                "grid must be strictly decreasing, found {} then {}",
                w[0], w[1]
            )));
        }
        if x0.len() != base_game.n() {
            return Err(Error::DimensionMismatch {
                expected: base_game.n(),
                got: x0.len(),
            });
        }
        if axis == SweepAxis::RraPerturbation {
            for (i, a) in base_game.agents().iter().enumerate() {
                if let Family::TanhBlendCrra { .. } = a.pref().family() {
                    return Err(Error::InvalidSweep(format!(
                        "agent {i}: rra_perturbation sweeps need CRRA or sine-perturbed agents"
                    )));
                }
            }
        }
        Ok(SweepConfig {
            base_game,
            market,
            x0,
            axis,
            grid,
            reference,
            solver: SolverOptions::default(),
        })
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn axis(&self) -> SweepAxis {
        self.axis
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    /// The game at grid value `eps`.
    pub fn game_at(&self, eps: f64) -> Result<Game> {
        match self.axis {
            SweepAxis::Lambda => self.base_game.with_lambdas(&vec![eps; self.base_game.n()]),
            SweepAxis::RraPerturbation => {
                let players = self
                    .base_game
                    .agents()
                    .iter()
                    .map(|a| Ok((Preference::sine_perturbed(base_rate(a.pref()), eps)?, a.lambda())))
                    .collect::<Result<Vec<_>>>()?;
                Game::new(&players)
            }
        }
    }

    /// The reference profile the sweep converges to.
    pub fn reference_profile(&self) -> Result<EquilibriumProfile> {
        match self.reference {
            SweepReference::CrraClosedForm => {
                let players: Vec<_> = self
                    .base_game
                    .agents()
                    .iter()
                    .map(|a| Ok((Preference::crra(base_rate(a.pref()))?, a.lambda())))
                    .collect::<Result<Vec<_>>>()?;
                crra_closed_form(&Game::new(&players)?, &self.market, &self.x0)
            }
            SweepReference::NoCompetition => {
                let game = self.base_game.with_lambdas(&vec![0.0; self.base_game.n()])?;
                no_competition_solve(&game, &self.market, &self.x0)
            }
        }
    }
}

fn base_rate(p: &Preference) -> f64 {
    match p.family() {
        Family::Crra { r } | Family::SinePerturbedCrra { r, .. } => r,
        Family::TanhBlendCrra { r_mean, .. } => r_mean,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

/// One grid value. Distances are the maximum over agents; `NaN` for
/// failed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub sup_dist: f64,
    pub l1_dist: f64,
    pub l2_dist: f64,
    pub newton_iters: usize,
    pub foc_residual: f64,
    pub budget_residual: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn all_solved(&self) -> bool {
        self.rows.iter().all(|r| r.status == RowStatus::Ok)
    }

    /// Sup distances never increase along the grid, up to [`MONOTONE_SLACK`].
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_dist <= w[0].sup_dist + MONOTONE_SLACK)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_dist < w[0].sup_dist)
    }

    /// `sup_dist[k+1] / sup_dist[k]`.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].sup_dist / w[0].sup_dist).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "epsilon",
            "sup_dist",
            "l1_dist",
            "l2_dist",
            "newton_iters",
            "foc_residual",
            "budget_residual",
            "status",
        ])?;
        for r in &self.rows {
            w.write_record([
                format!("{:.16e}", r.epsilon),
                format!("{:.16e}", r.sup_dist),
                format!("{:.16e}", r.l1_dist),
                format!("{:.16e}", r.l2_dist),
                r.newton_iters.to_string(),
                format!("{:.16e}", r.foc_residual),
                format!("{:.16e}", r.budget_residual),
                r.status.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Per-agent `(sup, L¹(P), L²(P))` distances, maximised over agents.
pub fn distances(market: &Market, a: &WealthMatrix, b: &WealthMatrix) -> (f64, f64, f64) {
    let mut out = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..a.agents() {
        let diff: Vec<f64> = (0..a.atoms()).map(|k| (a.get(k, i) - b.get(k, i)).abs()).collect();
        let sup = diff.iter().copied().fold(0.0, f64::max);
        let l1 = market.expect_p_with(|k| diff[k]);
        let l2 = market.expect_p_with(|k| diff[k] * diff[k]).sqrt();
        out = (out.0.max(sup), out.1.max(l1), out.2.max(l2));
    }
    out
}

fn run_row(cfg: &SweepConfig, reference: &WealthMatrix, eps: f64) -> SweepRow {
    let solved = cfg
        .game_at(eps)
        .and_then(|g| solve(&g, &cfg.market, &cfg.x0, &cfg.solver));
    match solved {
        Ok(p) => {
            let (sup, l1, l2) = distances(&cfg.market, &p.wealth, reference);
            SweepRow {
                epsilon: eps,
                sup_dist: sup,
                l1_dist: l1,
                l2_dist: l2,
                newton_iters: p.newton_iterations,
                foc_residual: p.foc_residual,
                budget_residual: p.budget_residual,
                status: RowStatus::Ok,
            }
        }
        Err(e) => SweepRow {
            epsilon: eps,
            sup_dist: f64::NAN,
            l1_dist: f64::NAN,
            l2_dist: f64::NAN,
            newton_iters: 0,
            foc_residual: f64::NAN,
            budget_residual: f64::NAN,
            status: RowStatus::Failed(e.to_string()),
        },
    }
}

/// Solves every grid value (rows in parallel, output in grid order).
/// Row failures are recorded, not propagated; only a failure of the
/// reference itself is an error.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    let reference = cfg.reference_profile()?.wealth;
    let rows = cfg
        .grid
        .par_iter()
        .map(|eps| run_row(cfg, &reference, *eps))
        .collect();
    Ok(SweepTable { rows })
}
