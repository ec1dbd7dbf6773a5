//! Independent cross-check of equilibria: single-agent utility
//! maximisation with a numéraire, best responses, and Gauss–Seidel
//! best-response iteration.
//!
//! Best-response iteration is only trusted where it converges; failing to
//! converge says nothing about existence.

use crate::error::{Error, Result};
use crate::gmap::Game;
use crate::hmap::{WealthMatrix, WealthVector};
use crate::market::Market;
use crate::numeric::{compensated_sum, solve_decreasing, RootTolerance};
use crate::preferences::Preference;

/// Stop threshold on the sup-change of one Gauss–Seidel round.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// A positive random variable `L` per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Numeraire(Vec<f64>);

impl Numeraire {
    pub fn new(l: Vec<f64>) -> Result<Self> {
        if let Some(k) = l.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidNumeraire(format!("atom {k} has value {}", l[k])));
        }
        Ok(Numeraire(l))
    }

    /// `L ≡ 1`.
    pub fn unit(atoms: usize) -> Self {
        Numeraire(vec![1.0; atoms])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Optimiser `g = L·I(yLZ)` of one agent's problem.
#[derive(Debug, Clone)]
pub struct SingleAgentSolution {
    pub g: Vec<f64>,
    pub y: f64,
    pub log_y: f64,
    /// `|E^Q[g] − x|`.
    pub budget_residual: f64,
}

/// Maximises `E[U(g/L)]` subject to `E^Q[g] = x`. The dual `y` is the
/// root of the budget equation, found in `ln y`.
pub fn single_agent_solve(pref: &Preference, market: &Market, l: &Numeraire, x: f64) -> Result<SingleAgentSolution> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidWealth(format!("budget must be positive, got {x}")));
    }
    if l.0.len() != market.atom_count() {
        return Err(Error::DimensionMismatch {
            expected: market.atom_count(),
            got: l.0.len(),
        });
    }
    let log_l: Vec<f64> = l.0.iter().map(|v| v.ln()).collect();
    let shifts: Vec<f64> = log_l.iter().zip(market.log_z()).map(|(a, b)| a + b).collect();
    let log_x = x.ln();

    // ln g_k = ln l_k + V⁻¹(t + ln l_k + ln z_k)
    let log_g = |t: f64| -> Vec<f64> {
        shifts
            .iter()
            .zip(&log_l)
            .map(|(s, ll)| ll + pref.v_inv(t + s))
            .collect()
    };
    let budget = |t: f64| -> (f64, f64) {
        let lg = log_g(t);
        let terms: Vec<f64> = (0..lg.len())
            .map(|k| market.p()[k] * market.z()[k] * lg[k].exp())
            .collect();
        let total = compensated_sum(terms.iter().copied());
        let slope = compensated_sum(
            terms
                .iter()
                .zip(&lg)
                .zip(&log_l)
                .map(|((w, g), ll)| w / pref.v_prime(g - ll)),
        ) / total;
        (total.ln() - log_x, slope)
    };

    // Tangent-CRRA guess: g = l (y l z)^{-1/r}.
    let r = pref.tangent_rra();
    let moment = market.expect_q_with(|k| ((1.0 - 1.0 / r) * log_l[k] - market.log_z()[k] / r).exp());
    let guess = -r * (log_x - moment.ln());
    let tol = RootTolerance::with_ftol(2e-13);
    let root = solve_decreasing(budget, guess, 1.0, &tol)?;

    let g: Vec<f64> = log_g(root.x).into_iter().map(f64::exp).collect();
    let budget_residual = (market.expect_q_with(|k| g[k]) - x).abs();
    Ok(SingleAgentSolution {
        g,
        y: root.x.exp(),
        log_y: root.x,
        budget_residual,
    })
}

/// `L = (∏_{j≠i} Xʲ)^{μᵢ}` per atom.
pub fn numeraire_for(game: &Game, profile: &WealthMatrix, i: usize) -> Result<Numeraire> {
    let mu = game.agent(i).mu();
    let l = (0..profile.atoms())
        .map(|k| {
            let others: f64 = profile
                .row(k)
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, x)| x.ln())
                .sum();
            (mu * others).exp()
        })
        .collect();
    Numeraire::new(l)
}

/// Agent `i`'s optimal terminal wealth with the others held at `profile`.
pub fn best_response(
    game: &Game,
    market: &Market,
    x0: &WealthVector,
    profile: &WealthMatrix,
    i: usize,
) -> Result<Vec<f64>> {
    if profile.agents() != game.n() || x0.len() != game.n() {
        return Err(Error::DimensionMismatch {
            expected: game.n(),
            got: profile.agents().min(x0.len()),
        });
    }
    if let Some((atom, agent, value)) = profile.first_nonpositive() {
        return Err(Error::NonPositiveWealth { atom, agent, value });
    }
    let l = numeraire_for(game, profile, i)?;
    Ok(single_agent_solve(game.agent(i).pref(), market, &l, x0.values()[i])?.g)
}

/// Result of [`fixed_point_iterate`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub profile: WealthMatrix,
    pub converged: bool,
    /// Sup-change of each round.
    pub history: Vec<f64>,
    pub rounds: usize,
}

/// Gauss–Seidel best-response iteration over agents `1..N`, stopping when
/// a round changes no entry by more than [`FIXED_POINT_TOL`].
pub fn fixed_point_iterate(
    game: &Game,
    market: &Market,
    x0: &WealthVector,
    start: &WealthMatrix,
    max_rounds: usize,
) -> Result<FixedPoint> {
    let mut profile = start.clone();
    let mut history = Vec::new();
    for round in 1..=max_rounds {
        let mut change = 0.0f64;
        for i in 0..game.n() {
            let next = best_response(game, market, x0, &profile, i)?;
            for (k, v) in next.iter().enumerate() {
                change = change.max((v - profile.get(k, i)).abs());
            }
            profile.set_column(i, &next);
        }
        history.push(change);
        if change <= FIXED_POINT_TOL {
            return Ok(FixedPoint {
                profile,
                converged: true,
                history,
                rounds: round,
            });
        }
        if !change.is_finite() {
            break;
        }
    }
    let rounds = history.len();
    Ok(FixedPoint {
        profile,
        converged: false,
        history,
        rounds,
    })
}

/// `U(x) = ∫₀^{ln x} exp(V(s) + s) ds`, normalised so `U(1) = 0`.
pub fn utility(pref: &Preference, x: f64) -> f64 {
    let b = x.ln();
    let f = |s: f64| (pref.v(s) + s).exp();
    adaptive_simpson(&f, 0.0, b, 1e-15 * (1.0 + b.abs()), 50)
}

/// `E_P[U(g/L)]`.
pub fn expected_utility(pref: &Preference, market: &Market, l: &Numeraire, g: &[f64]) -> f64 {
    compensated_sum((0..market.atom_count()).map(|k| market.p()[k] * utility(pref, g[k] / l.0[k])))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
