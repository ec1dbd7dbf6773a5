//! The dual-to-wealth maps
//!
//! ```text
//! H(D) = exp G⁻¹(D + ln Z·𝟙),    h(D) = ln E^Q[H(D)],
//! ```
//!
//! the exact Jacobian of `h` as an `Hⁱ`-weighted `Q`-average of `J[G⁻¹]`,
//! and a damped Newton solver for `h(D) = ln x₀`.
//!
//! Each evaluation inverts `G` once per atom. Atoms are processed in
//! parallel and collected in atom order, and all reductions use
//! compensated summation in that order, so results do not depend on the
//! thread schedule.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gmap::Game;
use crate::linalg::SquareMatrix;
use crate::market::Market;
use crate::numeric::{compensated_sum, sup_norm};

/// Logarithms `D = ln C` of the dual constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame(format!("dual vector must be finite: {d:?}")));
        }
        Ok(DualVector(d))
    }

    pub fn zeros(n: usize) -> Self {
        DualVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Positive initial wealths with cached logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthVector {
    x0: Vec<f64>,
    log_x0: Vec<f64>,
}

impl WealthVector {
    pub fn new(x0: Vec<f64>) -> Result<Self> {
        if let Some(i) = x0.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWealth(format!(
                "initial wealth of agent {i} must be positive, got {}",
                x0[i]
            )));
        }
        let log_x0 = x0.iter().map(|v| v.ln()).collect();
        Ok(WealthVector { x0, log_x0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.x0
    }

    pub fn logs(&self) -> &[f64] {
        &self.log_x0
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.x0.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        WealthVector::new(self.x0.iter().map(|v| v * c).collect())
    }
}

/// Terminal wealth per atom (rows) and agent (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct WealthMatrix {
    atoms: usize,
    agents: usize,
    data: Vec<f64>,
}

impl WealthMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let atoms = rows.len();
        let agents = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != agents) {
            return Err(Error::DimensionMismatch {
                expected: agents,
                got: bad.len(),
            });
        }
        Ok(WealthMatrix {
            atoms,
            agents,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds from per-agent columns.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let agents = cols.len();
        let atoms = cols.first().map_or(0, |c| c.len());
        if let Some(bad) = cols.iter().find(|c| c.len() != atoms) {
            return Err(Error::DimensionMismatch {
                expected: atoms,
                got: bad.len(),
            });
        }
        let data = (0..atoms)
            .flat_map(|k| cols.iter().map(move |c| c[k]))
            .collect();
        Ok(WealthMatrix { atoms, agents, data })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn get(&self, atom: usize, agent: usize) -> f64 {
        self.data[atom * self.agents + agent]
    }

    pub fn set(&mut self, atom: usize, agent: usize, v: f64) {
        self.data[atom * self.agents + agent] = v;
    }

    pub fn row(&self, atom: usize) -> &[f64] {
        &self.data[atom * self.agents..(atom + 1) * self.agents]
    }

    pub fn column(&self, agent: usize) -> Vec<f64> {
        (0..self.atoms).map(|k| self.get(k, agent)).collect()
    }

    pub fn set_column(&mut self, agent: usize, col: &[f64]) {
        for (k, v) in col.iter().enumerate() {
            self.set(k, agent, *v);
        }
    }

    /// Largest entrywise absolute difference.
    pub fn sup_distance(&self, other: &WealthMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        sup_norm(&self.data)
    }

    pub fn scaled(&self, c: f64) -> WealthMatrix {
        WealthMatrix {
            atoms: self.atoms,
            agents: self.agents,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// First nonpositive or non-finite entry, if any.
    pub fn first_nonpositive(&self) -> Option<(usize, usize, f64)> {
        self.data
            .iter()
            .position(|v| !(v.is_finite() && *v > 0.0))
            .map(|idx| (idx / self.agents, idx % self.agents, self.data[idx]))
    }
}

/// `h`, `H` and optionally `Jh` at one dual vector.
#[derive(Debug, Clone)]
pub struct HEvaluation {
    /// `ln H(D)` per atom.
    pub log_wealth: Vec<Vec<f64>>,
    /// `h(D)`.
    pub h: Vec<f64>,
    /// `E^Q[Hⁱ(D)]` per agent.
    pub budgets: Vec<f64>,
    /// `J[G⁻¹](D + ln z_k·𝟙)` per atom, when requested.
    pub atom_jacobians: Option<Vec<SquareMatrix>>,
    /// `Jh(D)`, when requested.
    pub jacobian: Option<SquareMatrix>,
}

impl HEvaluation {
    /// `H(D)` as a wealth matrix.
    pub fn wealth(&self) -> WealthMatrix {
        let rows = self
            .log_wealth
            .iter()
            .map(|r| r.iter().map(|v| v.exp()).collect())
            .collect();
        WealthMatrix::from_rows(rows).expect("rows have equal length")
    }

    /// Weights `q̃_{k,i} = p_k z_k H_{k,i} / E^Q[Hⁱ]` over atoms for agent `i`.
    pub fn weights(&self, market: &Market, agent: usize) -> Vec<f64> {
        (0..market.atom_count())
            .map(|k| {
                market.p()[k] * market.z()[k] * self.log_wealth[k][agent].exp() / self.budgets[agent]
            })
            .collect()
    }
}

/// Evaluates `H`, `h`, and optionally `Jh` at `d`.
pub fn evaluate(game: &Game, market: &Market, d: &DualVector, with_jacobian: bool) -> Result<HEvaluation> {
    let n = game.n();
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d.len(),
        });
    }
    let per_atom: Vec<(Vec<f64>, Option<SquareMatrix>)> = market
        .log_z()
        .par_iter()
        .map(|lz| {
            let target: Vec<f64> = d.as_slice().iter().map(|di| di + lz).collect();
            let y = game.g_invert(&target)?;
            let jac = if with_jacobian {
                Some(game.jacobian_inverse_lu(&y)?)
            } else {
                None
            };
            Ok((y, jac))
        })
        .collect::<Result<Vec<_>>>()?;

    let (log_wealth, atom_jacobians): (Vec<_>, Vec<_>) = per_atom.into_iter().unzip();
    let budgets: Vec<f64> = (0..n)
        .map(|i| market.expect_q_with(|k| log_wealth[k][i].exp()))
        .collect();
    let h: Vec<f64> = budgets.iter().map(|b| b.ln()).collect();

    let (atom_jacobians, jacobian) = if with_jacobian {
        let jacs: Vec<SquareMatrix> = atom_jacobians.into_iter().map(|j| j.unwrap()).collect();
        let mut jh = SquareMatrix::zeros(n);
        for i in 0..n {
            let w: Vec<f64> = (0..market.atom_count())
                .map(|k| market.p()[k] * market.z()[k] * log_wealth[k][i].exp() / budgets[i])
                .collect();
            for j in 0..n {
                jh[(i, j)] = compensated_sum(w.iter().zip(&jacs).map(|(wk, jk)| wk * jk[(i, j)]));
            }
        }
        (Some(jacs), Some(jh))
    } else {
        (None, None)
    };

    Ok(HEvaluation {
        log_wealth,
        h,
        budgets,
        atom_jacobians,
        jacobian,
    })
}

/// `H(D)`: terminal wealth per atom.
pub fn h_cal(game: &Game, market: &Market, d: &DualVector) -> Result<WealthMatrix> {
    Ok(evaluate(game, market, d, false)?.wealth())
}

/// `h(D) = ln E^Q[H(D)]`.
pub fn h_apply(game: &Game, market: &Market, d: &DualVector) -> Result<Vec<f64>> {
    Ok(evaluate(game, market, d, false)?.h)
}

/// Exact Jacobian of `h` at `D`.
pub fn h_jacobian(game: &Game, market: &Market, d: &DualVector) -> Result<SquareMatrix> {
    Ok(evaluate(game, market, d, true)?.jacobian.expect("requested"))
}

/// Options for [`h_invert`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when `‖h(D) − target‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Sufficient-decrease factor for the line search.
    pub armijo: f64,
    /// Starting point; the tangent-CRRA guess is used when absent.
    pub initial: Option<DualVector>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 60,
            max_backtracks: 40,
            armijo: 1e-4,
            initial: None,
        }
    }
}

/// One row of the Newton convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    pub step_size: f64,
}

/// Converged Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub dual: DualVector,
    pub residual: f64,
    /// Newton steps taken (0 when the initial guess already meets `tol`).
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    /// Evaluation at the solution.
    pub evaluation: HEvaluation,
}

/// Tangent-CRRA starting point `D₀ = J_c(target − h_c(0))`, where `J_c` is
/// the CRRA Jacobian with `rᵢ = −V'ᵢ(0)` and `h_c(0)ᵢ = ln E^Q[Z^{Aᵢ}]`,
/// `A = J_c⁻¹𝟙`. Exact for all-CRRA games.
pub fn tangent_initial_guess(game: &Game, market: &Market, target: &[f64]) -> DualVector {
    let jc = game.crra_jacobian();
    let a = game.crra_jacobian_inverse().mul_vec(&vec![1.0; game.n()]);
    let shift: Vec<f64> = target
        .iter()
        .zip(&a)
        .map(|(t, ai)| t - market.expect_q_with(|k| (ai * market.log_z()[k]).exp()).ln())
        .collect();
    DualVector(jc.mul_vec(&shift))
}

fn residual_of(h: &[f64], target: &[f64]) -> Vec<f64> {
    h.iter().zip(target).map(|(a, b)| a - b).collect()
}

/// Solves `h(D) = target` by Newton's method with a backtracking line
/// search on `‖h(D) − target‖∞`.
pub fn h_invert(game: &Game, market: &Market, target: &[f64], opts: &SolverOptions) -> Result<NewtonReport> {
    let n = game.n();
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len(),
        });
    }
    let mut d = match &opts.initial {
        Some(d0) => d0.clone(),
        None => tangent_initial_guess(game, market, target),
    };
    let mut eval = evaluate(game, market, &d, true)?;
    let mut r = residual_of(&eval.h, target);
    let mut norm = sup_norm(&r);
    let mut trace = vec![TraceRow {
        iteration: 0,
        residual: norm,
        step_size: 0.0,
    }];

    for iteration in 1..=opts.max_iter {
        if norm <= opts.tol {
            return Ok(NewtonReport {
                dual: d,
                residual: norm,
                iterations: iteration - 1,
                trace,
                evaluation: eval,
            });
        }
        let jac = eval.jacobian.as_ref().expect("requested");
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = jac
            .solve(&neg_r)
            .map_err(|_| Error::SingularJacobian { iteration })?;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = d.0.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            let trial = DualVector(trial);
            let trial_eval = evaluate(game, market, &trial, true)?;
            let trial_r = residual_of(&trial_eval.h, target);
            let trial_norm = sup_norm(&trial_r);
            if trial_norm <= (1.0 - opts.armijo * alpha) * norm {
                accepted = Some((trial, trial_eval, trial_r, trial_norm));
                break;
            }
            alpha *= 0.5;
        }
        let Some((nd, ne, nr, nn)) = accepted else {
            return Err(Error::MaxIterationsExceeded {
                iterations: iteration - 1,
                best: d.into_vec(),
                residual: norm,
                stalled: true,
            });
        };
        d = nd;
        eval = ne;
        r = nr;
        norm = nn;
        trace.push(TraceRow {
            iteration,
            residual: norm,
            step_size: alpha,
        });
    }
    if norm <= opts.tol {
        return Ok(NewtonReport {
            dual: d,
            residual: norm,
            iterations: opts.max_iter,
            trace,
            evaluation: eval,
        });
    }
    Err(Error::MaxIterationsExceeded {
        iterations: opts.max_iter,
        best: d.into_vec(),
        residual: norm,
        stalled: false,
    })
}
