//! The coupled log-marginal map `G: ℝᴺ → ℝᴺ`,
//!
//! ```text
//! Gⁱ(y) = Vᵢ(yᵢ − μᵢ Σ_{j≠i} yⱼ) − μᵢ Σ_{j≠i} yⱼ,
//! ```
//!
//! whose level sets at `D + ln Z·𝟙` are the first-order conditions of a Nash
//! equilibrium. Inversion reduces to one scalar monotone equation in the
//! aggregate `s = Σ yⱼ`: with `κᵢ = μᵢ/(1+μᵢ)` and `Wᵢ` the inverse of
//! `u ↦ Vᵢ(u) + κᵢ u`,
//!
//! ```text
//! Σᵢ Wᵢ(zᵢ + κᵢ s)/(1+μᵢ) = (1 − Σᵢ κᵢ)·s,
//! yᵢ = (Wᵢ(zᵢ + κᵢ s) + μᵢ s)/(1+μᵢ).
//! ```

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::numeric::{solve_decreasing, sup_norm, RootTolerance};
use crate::preferences::{AgentSpec, Preference};

/// Tolerance used when cross-checking the two inverse-Jacobian routes.
pub const INVERSE_CROSS_CHECK_TOL: f64 = 1e-10;

/// An `N`-player game: preferences and competition weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    agents: Vec<AgentSpec>,
    tangent_inverse: SquareMatrix,
}

/// Result of inverting `G`, with the aggregate `s` for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GInverse {
    pub y: Vec<f64>,
    pub s: f64,
}

impl Game {
    /// Builds a game from `(preference, λ)` pairs.
    ///
    /// Each agent must satisfy the RRA lower bound, and if every agent has
    /// `λ = 1` at least one must carry a finite RRA upper bound.
    pub fn new(players: &[(Preference, f64)]) -> Result<Self> {
        let n = players.len();
        if n < 2 {
            return Err(Error::InvalidGame(format!("need at least 2 players, got {n}")));
        }
        let agents = players
            .iter()
            .enumerate()
            .map(|(i, (p, l))| {
                AgentSpec::new(*p, *l, n).map_err(|e| match e {
                    Error::InvalidGame(msg) => Error::InvalidGame(format!("agent {i}: {msg}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if agents.iter().all(|a| a.lambda() == 1.0)
            && agents.iter().all(|a| a.pref().rra_hi().is_infinite())
        {
            return Err(Error::InvalidGame(
                "all competition weights equal 1 and no agent has a finite RRA upper bound; \
                 G⁻¹ is not globally Lipschitz"
                    .into(),
            ));
        }
        let tangent = tangent_jacobian(&agents);
        let tangent_inverse = tangent.inverse()?;
        Ok(Game {
            agents,
            tangent_inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.agents[i]
    }

    /// CRRA rates when every agent is CRRA.
    pub fn crra_rates(&self) -> Option<Vec<f64>> {
        self.agents.iter().map(|a| a.pref().as_crra()).collect()
    }

    /// Same preferences with all competition weights replaced.
    pub fn with_lambdas(&self, lambda: &[f64]) -> Result<Game> {
        if lambda.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: lambda.len(),
            });
        }
        let players: Vec<_> = self
            .agents
            .iter()
            .zip(lambda)
            .map(|(a, l)| (*a.pref(), *l))
            .collect();
        Game::new(&players)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Arguments `yᵢ − μᵢ Σ_{j≠i} yⱼ` of the marginals.
    fn inner_args(&self, y: &[f64]) -> Vec<f64> {
        let total: f64 = y.iter().sum();
        self.agents
            .iter()
            .zip(y)
            .map(|(a, yi)| yi - a.mu() * (total - yi))
            .collect()
    }

    /// Evaluates `G(y)`.
    pub fn g_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let total: f64 = y.iter().sum();
        Ok(self
            .agents
            .iter()
            .zip(y)
            .map(|(a, yi)| {
                let others = a.mu() * (total - yi);
                a.pref().v(yi - others) - others
            })
            .collect())
    }

    /// Jacobian of `G` at `y`: diagonal `vᵢ = V'ᵢ(·)`, off-diagonal
    /// entries `−(vᵢ+1)μᵢ` in row `i`.
    pub fn g_jacobian(&self, y: &[f64]) -> Result<SquareMatrix> {
        self.check_dim(y)?;
        let slopes: Vec<f64> = self
            .inner_args(y)
            .iter()
            .zip(&self.agents)
            .map(|(u, a)| a.pref().v_prime(*u))
            .collect();
        Ok(self.jacobian_from_slopes(&slopes))
    }

    fn jacobian_from_slopes(&self, v: &[f64]) -> SquareMatrix {
        SquareMatrix::from_fn(self.n(), |i, j| {
            if i == j {
                v[i]
            } else {
                -(v[i] + 1.0) * self.agents[i].mu()
            }
        })
    }

    /// Constant Jacobian of the CRRA game tangent at the origin
    /// (`rᵢ = −V'ᵢ(0)`); exact for all-CRRA games.
    pub fn crra_jacobian(&self) -> SquareMatrix {
        tangent_jacobian(&self.agents)
    }

    /// Inverse of [`Self::crra_jacobian`].
    pub fn crra_jacobian_inverse(&self) -> &SquareMatrix {
        &self.tangent_inverse
    }

    /// Residual and derivative of the aggregate equation at `s`:
    /// `φ(s) = Σᵢ Wᵢ(zᵢ + κᵢ s)/(1+μᵢ) − (1 − Σᵢ κᵢ)s`, strictly decreasing.
    pub fn s_equation(&self, z: &[f64], s: f64) -> Result<(f64, f64)> {
        self.check_dim(z)?;
        let mut value = 0.0;
        let mut slope = 0.0;
        let mut kappa_sum = 0.0;
        for (a, zi) in self.agents.iter().zip(z) {
            let k = a.kappa();
            let w = a.w(zi + k * s)?;
            value += w / (1.0 + a.mu());
            slope += k / (1.0 + a.mu()) * a.w_prime_at(w);
            kappa_sum += k;
        }
        let rhs_slope = 1.0 - kappa_sum;
        Ok((value - rhs_slope * s, slope - rhs_slope))
    }

    /// Inverts `G` through the aggregate equation, returning `y` and `s`.
    pub fn g_invert_with_aggregate(&self, z: &[f64]) -> Result<GInverse> {
        self.check_dim(z)?;
        // Tangent-CRRA guess for the aggregate.
        let guess: f64 = self.tangent_inverse.mul_vec(z).iter().sum();
        let scale = 1.0 + sup_norm(z);
        let tol = RootTolerance::with_ftol(1e-13 * scale);
        let mut inner_err = None;
        let root = solve_decreasing(
            |s| match self.s_equation(z, s) {
                Ok(v) => v,
                Err(e) => {
                    inner_err = Some(e);
                    (f64::NAN, f64::NAN)
                }
            },
            guess,
            1e-3 * (1.0 + guess.abs()),
            &tol,
        );
        if let Some(e) = inner_err {
            return Err(e);
        }
        let s = root?.x;
        let y = self
            .agents
            .iter()
            .zip(z)
            .map(|(a, zi)| {
                let w = a.w(zi + a.kappa() * s)?;
                Ok((w + a.mu() * s) / (1.0 + a.mu()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GInverse { y, s })
    }

    /// `G⁻¹(z)`.
    pub fn g_invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.g_invert_with_aggregate(z)?.y)
    }

    /// `[JG(y)]⁻¹` by LU factorisation.
    pub fn jacobian_inverse_lu(&self, y: &[f64]) -> Result<SquareMatrix> {
        self.g_jacobian(y)?.inverse()
    }

    /// `[JG(y)]⁻¹` assembled column by column in closed form.
    ///
    /// Column `k` solves `JG·u = e_k`. With `cᵢ = 1/((1+μᵢ)(vᵢ+κᵢ))` the
    /// column sum is `s = c_k / (1 − Σᵢ κᵢ(1+cᵢ))`, and
    /// `u_ik = (1+cᵢ)κᵢ s + [i=k]·c_k`.
    pub fn jacobian_inverse_explicit(&self, y: &[f64]) -> Result<SquareMatrix> {
        self.check_dim(y)?;
        let n = self.n();
        let c: Vec<f64> = self
            .inner_args(y)
            .iter()
            .zip(&self.agents)
            .map(|(u, a)| 1.0 / ((1.0 + a.mu()) * (a.pref().v_prime(*u) + a.kappa())))
            .collect();
        let denom = 1.0
            - self
                .agents
                .iter()
                .zip(&c)
                .map(|(a, ci)| a.kappa() * (1.0 + ci))
                .sum::<f64>();
        if !(denom > 0.0) {
            return Err(Error::SingularMatrix);
        }
        Ok(SquareMatrix::from_fn(n, |i, k| {
            let s = c[k] / denom;
            let off = (1.0 + c[i]) * self.agents[i].kappa() * s;
            if i == k {
                c[k] + off
            } else {
                off
            }
        }))
    }

    /// `J[G⁻¹](z) = [JG(G⁻¹(z))]⁻¹`, by LU.
    pub fn g_inverse_jacobian(&self, z: &[f64]) -> Result<SquareMatrix> {
        let y = self.g_invert(z)?;
        self.jacobian_inverse_lu(&y)
    }

    /// Like [`Self::g_inverse_jacobian`] but computes both routes and fails
    /// if they disagree by more than [`INVERSE_CROSS_CHECK_TOL`].
    pub fn g_inverse_jacobian_checked(&self, z: &[f64]) -> Result<SquareMatrix> {
        let y = self.g_invert(z)?;
        let lu = self.jacobian_inverse_lu(&y)?;
        let explicit = self.jacobian_inverse_explicit(&y)?;
        let diff = lu.max_abs_diff(&explicit);
        if diff > INVERSE_CROSS_CHECK_TOL {
            return Err(Error::InconsistentInverse(diff));
        }
        Ok(lu)
    }

    /// A global bound `L ≥ sup_z ‖J[G⁻¹](z)‖∞`.
    ///
    /// Uses `|cᵢ| ≤ 1/((1+μᵢ)εᵢ)`, `cᵢ ≤ −1/((1+μᵢ)(Rᵢ−κᵢ))` and the
    /// resulting lower bound on `1 − Σ κᵢ(1+cᵢ)` to bound each row of the
    /// explicit inverse. Returns `+∞` only when the game is outside the
    /// regime where `G⁻¹` is Lipschitz (rejected by [`Game::new`]).
    pub fn lipschitz_bound(&self) -> f64 {
        let c_abs_max: Vec<f64> = self
            .agents
            .iter()
            .map(|a| 1.0 / ((1.0 + a.mu()) * a.epsilon()))
            .collect();
        let c_max: Vec<f64> = self
            .agents
            .iter()
            .map(|a| {
                let hi = a.pref().rra_hi();
                if hi.is_finite() {
                    -1.0 / ((1.0 + a.mu()) * (hi - a.kappa()))
                } else {
                    0.0
                }
            })
            .collect();
        let denom_min = 1.0
            - self
                .agents
                .iter()
                .zip(&c_max)
                .map(|(a, c)| a.kappa() * (1.0 + c))
                .sum::<f64>();
        if !(denom_min > 0.0) {
            return f64::INFINITY;
        }
        let c_total: f64 = c_abs_max.iter().sum();
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                // |1 + cᵢ| over cᵢ ∈ [−c_abs_max, c_max]
                let b = (1.0 - c_abs_max[i]).abs().max((1.0 + c_max[i]).abs());
                c_abs_max[i] + b * a.kappa() * c_total / denom_min
            })
            .fold(0.0, f64::max)
    }
}

fn tangent_jacobian(agents: &[AgentSpec]) -> SquareMatrix {
    SquareMatrix::from_fn(agents.len(), |i, j| {
        let v = -agents[i].pref().tangent_rra();
        if i == j {
            v
        } else {
            -(v + 1.0) * agents[i].mu()
        }
    })
}
