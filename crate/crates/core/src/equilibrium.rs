//! Equilibrium solve and verification, plus the CRRA and decoupled
//! closed-form references.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmap::Game;
use crate::hmap::{self, DualVector, NewtonReport, SolverOptions, TraceRow, WealthMatrix, WealthVector};
use crate::market::Market;
use crate::numeric::sup_norm;
use crate::oracle::{self, Numeraire};

/// Residual tolerance a solved profile must meet (budget tolerance is
/// this times `max(x0)`).
pub const VERIFY_TOL: f64 = 1e-8;

/// Which uniqueness argument covers a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    #[serde(rename = "crra-closed-form")]
    CrraClosedForm,
    #[serde(rename = "no-competition")]
    NoCompetition,
    #[serde(rename = "prop-4.2")]
    CloseToCrra,
    #[serde(rename = "prop-4.3")]
    SmallCompetition,
    #[serde(rename = "unverified-regime")]
    Unverified,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::CrraClosedForm => "crra-closed-form",
            RegimeLabel::NoCompetition => "no-competition",
            RegimeLabel::CloseToCrra => "prop-4.2",
            RegimeLabel::SmallCompetition => "prop-4.3",
            RegimeLabel::Unverified => "unverified-regime",
        }
    }

    /// Whether the equilibrium is known to be unique.
    pub fn unique(self) -> bool {
        self != RegimeLabel::Unverified
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Engineering thresholds for the near-CRRA and weak-competition labels.
/// They are not certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Largest allowed `rra_hi − rra_lo` across agents.
    pub rra_spread: f64,
    /// Largest allowed `λ` across agents.
    pub lambda: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            rra_spread: 0.25,
            lambda: 0.1,
        }
    }
}

impl RegimeThresholds {
    pub fn classify(&self, game: &Game) -> RegimeLabel {
        let agents = game.agents();
        if game.crra_rates().is_some() {
            RegimeLabel::CrraClosedForm
        } else if agents.iter().all(|a| a.lambda() == 0.0) {
            RegimeLabel::NoCompetition
        } else if agents
            .iter()
            .all(|a| a.pref().rra_hi() - a.pref().rra_lo() <= self.rra_spread)
        {
            RegimeLabel::CloseToCrra
        } else if agents
            .iter()
            .all(|a| a.lambda() <= self.lambda && a.pref().rra_hi().is_finite())
        {
            RegimeLabel::SmallCompetition
        } else {
            RegimeLabel::Unverified
        }
    }
}

/// A Nash equilibrium together with its diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub wealth: WealthMatrix,
    pub dual: DualVector,
    /// `E^Q[Xⁱ]` per agent.
    pub budgets: Vec<f64>,
    pub foc_residual: f64,
    pub budget_residual: f64,
    pub regime: RegimeLabel,
    pub newton_iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Output of [`verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub foc: f64,
    pub budget: f64,
    /// `Q`-weighted mean of `G(ln X_k) − ln z_k` per agent.
    pub dual: Vec<f64>,
    pub budgets: Vec<f64>,
}

impl Residuals {
    pub fn passes(&self, x0: &WealthVector, tol: f64) -> bool {
        self.foc <= tol && self.budget <= tol * x0.max()
    }
}

fn check_dims(game: &Game, market: &Market, x0: &WealthVector, wealth: Option<&WealthMatrix>) -> Result<()> {
    if x0.len() != game.n() {
        return Err(Error::DimensionMismatch {
            expected: game.n(),
            got: x0.len(),
        });
    }
    if let Some(w) = wealth {
        if w.agents() != game.n() {
            return Err(Error::DimensionMismatch {
                expected: game.n(),
                got: w.agents(),
            });
        }
        if w.atoms() != market.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: market.atom_count(),
                got: w.atoms(),
            });
        }
    }
    Ok(())
}

/// First-order-condition and budget residuals of a wealth profile.
pub fn verify(game: &Game, market: &Market, x0: &WealthVector, wealth: &WealthMatrix) -> Result<Residuals> {
    check_dims(game, market, x0, Some(wealth))?;
    if let Some((atom, agent, value)) = wealth.first_nonpositive() {
        return Err(Error::NonPositiveWealth { atom, agent, value });
    }
    let n = game.n();
    let k_count = market.atom_count();
    let mut implied = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let y: Vec<f64> = wealth.row(k).iter().map(|x| x.ln()).collect();
        let g = game.g_apply(&y)?;
        implied.push(g.into_iter().map(|v| v - market.log_z()[k]).collect::<Vec<f64>>());
    }
    let dual: Vec<f64> = (0..n).map(|i| market.expect_q_with(|k| implied[k][i])).collect();
    let foc = implied
        .iter()
        .flat_map(|row| row.iter().zip(&dual).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let budgets: Vec<f64> = (0..n).map(|i| market.expect_q_with(|k| wealth.get(k, i))).collect();
    let budget = budgets
        .iter()
        .zip(x0.values())
        .map(|(b, x)| (b - x).abs())
        .fold(0.0, f64::max);
    Ok(Residuals {
        foc,
        budget,
        dual,
        budgets,
    })
}

fn finish(
    game: &Game,
    market: &Market,
    x0: &WealthVector,
    wealth: WealthMatrix,
    dual: DualVector,
    newton: Option<NewtonReport>,
) -> Result<EquilibriumProfile> {
    let res = verify(game, market, x0, &wealth)?;
    if !res.passes(x0, VERIFY_TOL) {
        return Err(Error::VerificationFailed {
            foc: res.foc,
            budget: res.budget,
        });
    }
    let (newton_iterations, trace) = newton.map_or((0, Vec::new()), |r| (r.iterations, r.trace));
    Ok(EquilibriumProfile {
        wealth,
        dual,
        budgets: res.budgets,
        foc_residual: res.foc,
        budget_residual: res.budget,
        regime: RegimeThresholds::default().classify(game),
        newton_iterations,
        trace,
    })
}

/// Solves for the equilibrium financed by `x0`: `D = h⁻¹(ln x0)`,
/// `X = H(D)`, then verifies the result.
pub fn solve(game: &Game, market: &Market, x0: &WealthVector, opts: &SolverOptions) -> Result<EquilibriumProfile> {
    check_dims(game, market, x0, None)?;
    let report = hmap::h_invert(game, market, x0.logs(), opts)?;
    let wealth = report.evaluation.wealth();
    if let Some((atom, agent, value)) = wealth.first_nonpositive() {
        return Err(Error::NonPositiveWealth { atom, agent, value });
    }
    let dual = report.dual.clone();
    finish(game, market, x0, wealth, dual, Some(report))
}

/// Closed-form equilibrium for all-CRRA games:
/// `Xⁱ = x0ᵢ z^{Aᵢ} / E^Q[z^{Aᵢ}]` with `A = J_c⁻¹𝟙`.
pub fn crra_closed_form(game: &Game, market: &Market, x0: &WealthVector) -> Result<EquilibriumProfile> {
    check_dims(game, market, x0, None)?;
    if game.crra_rates().is_none() {
        return Err(Error::Unsupported("every agent to have CRRA preferences"));
    }
    let n = game.n();
    let a = game.crra_jacobian_inverse().mul_vec(&vec![1.0; n]);
    let log_norm: Vec<f64> = a
        .iter()
        .map(|ai| market.expect_q_with(|k| (ai * market.log_z()[k]).exp()).ln())
        .collect();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            market
                .log_z()
                .iter()
                .map(|lz| (x0.logs()[i] + a[i] * lz - log_norm[i]).exp())
                .collect()
        })
        .collect();
    let wealth = WealthMatrix::from_columns(&cols)?;
    let shift: Vec<f64> = x0.logs().iter().zip(&log_norm).map(|(l, c)| l - c).collect();
    let dual = DualVector::new(game.crra_jacobian().mul_vec(&shift))?;
    finish(game, market, x0, wealth, dual, None)
}

/// Equilibrium of the decoupled game (`λ = 0`): each agent solves its own
/// budget problem `E^Q[Iᵢ(yᵢZ)] = x0ᵢ`. The dual is `ln yᵢ`.
pub fn no_competition_solve(game: &Game, market: &Market, x0: &WealthVector) -> Result<EquilibriumProfile> {
    check_dims(game, market, x0, None)?;
    if game.agents().iter().any(|a| a.lambda() != 0.0) {
        return Err(Error::Unsupported("every competition weight to be zero"));
    }
    let unit = Numeraire::unit(market.atom_count());
    let mut cols = Vec::with_capacity(game.n());
    let mut dual = Vec::with_capacity(game.n());
    for (agent, x) in game.agents().iter().zip(x0.values()) {
        let sol = oracle::single_agent_solve(agent.pref(), market, &unit, *x)?;
        dual.push(sol.log_y);
        cols.push(sol.g);
    }
    let wealth = WealthMatrix::from_columns(&cols)?;
    finish(game, market, x0, wealth, DualVector::new(dual)?, None)
}

/// Sup-norm distance between two profiles relative to the largest entry of `b`.
pub fn relative_sup_distance(a: &WealthMatrix, b: &WealthMatrix) -> f64 {
    a.sup_distance(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Writes `atom,p,z,X1..XN` with 17 significant digits.
pub fn write_wealth_csv<W: Write>(market: &Market, wealth: &WealthMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["atom".to_string(), "p".to_string(), "z".to_string()];
    header.extend((1..=wealth.agents()).map(|i| format!("X{i}")));
    w.write_record(&header)?;
    for k in 0..wealth.atoms() {
        let mut rec = vec![k.to_string(), format!("{:.16e}", market.p()[k]), format!("{:.16e}", market.z()[k])];
        rec.extend(wealth.row(k).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a wealth CSV written by [`write_wealth_csv`]. Only the `X*`
/// columns are used; atoms must appear in order.
pub fn read_wealth_csv<R: Read>(reader: R) -> Result<WealthMatrix> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('X'))
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidWealth("wealth csv has no X columns".into()));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = cols
            .iter()
            .map(|&c| {
                rec.get(c)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidWealth(format!("row {k}, column {}: not a number", &headers[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    WealthMatrix::from_rows(rows)
}

/// Sup-norm of the dual difference.
pub fn dual_distance(a: &DualVector, b: &DualVector) -> f64 {
    let diff: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    sup_norm(&diff)
}
