//! Agent preferences in log-marginal form.
//!
//! A utility `U` is never evaluated directly. Each agent is described by
//! `V(y) = ln U'(e^y)`, a strictly decreasing bijection of ℝ whose negative
//! slope is the relative risk aversion: `RRA[U](x) = −V'(ln x)`. All families
//! are normalised so that `V(0) = 0`, i.e. `U'(1) = 1`.

use crate::error::{Error, Result};
use crate::numeric::{solve_decreasing, RootTolerance};

/// Parametric utility families with analytic RRA bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `V(y) = −r·y`.
    Crra { r: f64 },
    /// `V(y) = −r·y + a·(cos y − 1)`, RRA in `[r − a, r + a]`.
    SinePerturbedCrra { r: f64, amplitude: f64 },
    /// `V(y) = −r·y − δ·ln cosh y`, RRA in `[r − δ, r + δ]`.
    TanhBlendCrra { r_mean: f64, delta: f64 },
}

/// One agent's preferences with certified bounds on relative risk aversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference {
    family: Family,
    rra_lo: f64,
    rra_hi: f64,
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPreference(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Preference {
    pub fn crra(r: f64) -> Result<Self> {
        positive("r", r)?;
        Ok(Preference {
            family: Family::Crra { r },
            rra_lo: r,
            rra_hi: r,
        })
    }

    pub fn sine_perturbed(r: f64, amplitude: f64) -> Result<Self> {
        positive("r", r)?;
        if !(amplitude.is_finite() && (0.0..r).contains(&amplitude)) {
            return Err(Error::InvalidPreference(format!(
                "sine amplitude must lie in [0, r) = [0, {r}), got {amplitude}"
            )));
        }
        Ok(Preference {
            family: Family::SinePerturbedCrra { r, amplitude },
            rra_lo: r - amplitude,
            rra_hi: r + amplitude,
        })
    }

    pub fn tanh_blend(r_mean: f64, delta: f64) -> Result<Self> {
        positive("r_mean", r_mean)?;
        if !(delta.is_finite() && (0.0..r_mean).contains(&delta)) {
            return Err(Error::InvalidPreference(format!(
                "tanh delta must lie in [0, r_mean) = [0, {r_mean}), got {delta}"
            )));
        }
        Ok(Preference {
            family: Family::TanhBlendCrra { r_mean, delta },
            rra_lo: r_mean - delta,
            rra_hi: r_mean + delta,
        })
    }

    /// Replaces the analytic RRA bounds by looser declared ones.
    ///
    /// Declared bounds may only widen the certified interval; `hi` may be
    /// `+∞` to withhold an upper bound.
    pub fn with_declared_bounds(mut self, lo: Option<f64>, hi: Option<f64>) -> Result<Self> {
        if let Some(lo) = lo {
            if !(lo > 0.0 && lo <= self.rra_lo) {
                return Err(Error::InvalidPreference(format!(
                    "declared rra_lo {lo} must lie in (0, {}]",
                    self.rra_lo
                )));
            }
            self.rra_lo = lo;
        }
        if let Some(hi) = hi {
            if !(hi >= self.rra_hi) {
                return Err(Error::InvalidPreference(format!(
                    "declared rra_hi {hi} must be at least {}",
                    self.rra_hi
                )));
            }
            self.rra_hi = hi;
        }
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Certified lower bound on RRA, `inf(−V')`.
    pub fn rra_lo(&self) -> f64 {
        self.rra_lo
    }

    /// Certified upper bound on RRA, possibly `+∞`.
    pub fn rra_hi(&self) -> f64 {
        self.rra_hi
    }

    /// Constant RRA when the preference is CRRA (including zero perturbation).
    pub fn as_crra(&self) -> Option<f64> {
        match self.family {
            Family::Crra { r } => Some(r),
            Family::SinePerturbedCrra { r, amplitude: 0.0 } => Some(r),
            Family::TanhBlendCrra { r_mean, delta: 0.0 } => Some(r_mean),
            _ => None,
        }
    }

    /// RRA of the tangent CRRA utility at `x = 1`, `−V'(0)`.
    pub fn tangent_rra(&self) -> f64 {
        -self.v_prime(0.0)
    }

    pub fn v(&self, y: f64) -> f64 {
        match self.family {
            Family::Crra { r } => -r * y,
            Family::SinePerturbedCrra { r, amplitude } => -r * y + amplitude * (y.cos() - 1.0),
            Family::TanhBlendCrra { r_mean, delta } => -r_mean * y - delta * ln_cosh(y),
        }
    }

    pub fn v_prime(&self, y: f64) -> f64 {
        match self.family {
            Family::Crra { r } => -r,
            Family::SinePerturbedCrra { r, amplitude } => -r - amplitude * y.sin(),
            Family::TanhBlendCrra { r_mean, delta } => -r_mean - delta * y.tanh(),
        }
    }

    /// `RRA[U](x) = −V'(ln x)`.
    pub fn rra(&self, x: f64) -> f64 {
        -self.v_prime(x.ln())
    }

    /// Inverse of `V`.
    pub fn v_inv(&self, t: f64) -> f64 {
        self.shifted_inverse(0.0, t)
            .expect("V is a strictly decreasing bijection of the reals")
    }

    /// Solves `V(u) + κ·u = t` for `u`, given `κ < rra_lo`.
    pub(crate) fn shifted_inverse(&self, kappa: f64, t: f64) -> Result<f64> {
        if let Some(r) = self.as_crra() {
            return Ok(-t / (r - kappa));
        }
        // Root lies within |t|/(rra_lo − κ) of 0; start from the tangent guess.
        let slope = self.tangent_rra() - kappa;
        let guess = -t / slope;
        let step = 1e-3 * (1.0 + guess.abs());
        let tol = RootTolerance::with_ftol(1e-15 * (1.0 + t.abs()));
        let root = solve_decreasing(
            |u| (self.v(u) + kappa * u - t, self.v_prime(u) + kappa),
            guess,
            step,
            &tol,
        )?;
        Ok(root.x)
    }

    /// Inverse marginal utility `I = (U')⁻¹`, `I(y) = exp(V⁻¹(ln y))`.
    pub fn inverse_marginal(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::InvalidPreference(format!(
                "inverse marginal utility needs y > 0, got {y}"
            )));
        }
        Ok(self.v_inv(y.ln()).exp())
    }

    /// Marginal utility `U'(x) = exp(V(ln x))`.
    pub fn marginal(&self, x: f64) -> f64 {
        self.v(x.ln()).exp()
    }
}

/// An agent inside an `N`-player game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    pref: Preference,
    lambda: f64,
    mu: f64,
}

impl AgentSpec {
    /// Builds an agent with competition weight `lambda` among `n_players`,
    /// enforcing `RRA ≥ ε + μ/(1+μ)` for some `ε > 0`.
    pub fn new(pref: Preference, lambda: f64, n_players: usize) -> Result<Self> {
        if n_players < 2 {
            return Err(Error::InvalidGame(format!("need at least 2 players, got {n_players}")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidGame(format!(
                "competition weight lambda must lie in [0, 1], got {lambda}"
            )));
        }
        let mu = lambda / (n_players as f64 - 1.0);
        let agent = AgentSpec { pref, lambda, mu };
        if !(agent.epsilon() > 0.0) {
            return Err(Error::InvalidGame(format!(
                "relative risk aversion lower bound violated: rra_lo = {} must exceed mu/(1+mu) = {}",
                pref.rra_lo(),
                agent.kappa()
            )));
        }
        Ok(agent)
    }

    pub fn pref(&self) -> &Preference {
        &self.pref
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `μ = λ/(N−1)`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `κ = μ/(1+μ)`.
    pub fn kappa(&self) -> f64 {
        self.mu / (1.0 + self.mu)
    }

    /// Margin `ε = rra_lo − μ/(1+μ) > 0`.
    pub fn epsilon(&self) -> f64 {
        self.pref.rra_lo() - self.kappa()
    }

    /// Inverse of `u ↦ V(u) + κ·u`.
    pub fn w(&self, t: f64) -> Result<f64> {
        self.pref.shifted_inverse(self.kappa(), t)
    }

    /// Derivative of `W` at the point whose image is `u = W(t)`.
    pub fn w_prime_at(&self, u: f64) -> f64 {
        1.0 / (self.pref.v_prime(u) + self.kappa())
    }

    /// Change of variables to competition against the average of all
    /// players including oneself.
    pub fn bar_transform(&self, n_players: usize) -> BarTransform {
        let n = n_players as f64;
        BarTransform {
            bar_lambda: self.lambda * n / (n - 1.0 + self.lambda),
            mu: self.mu,
            pref: self.pref,
        }
    }
}

/// `Ū(x) = U(x^{1+μ})` together with its competition weight `λ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarTransform {
    pub bar_lambda: f64,
    pub mu: f64,
    pref: Preference,
}

impl BarTransform {
    /// `RRA[Ū](x)` via the closed-form relation `−μ + (1+μ)·RRA[U](x^{1+μ})`.
    pub fn rra_bar(&self, x: f64) -> f64 {
        -self.mu + (1.0 + self.mu) * self.pref.rra(x.powf(1.0 + self.mu))
    }

    /// `ln Ū'(x)` evaluated from `Ū'(x) = (1+μ)·x^μ·U'(x^{1+μ})`.
    pub fn log_marginal_bar(&self, x: f64) -> f64 {
        ((1.0 + self.mu) * x.powf(self.mu) * self.pref.marginal(x.powf(1.0 + self.mu))).ln()
    }

    /// `RRA[Ū](x) = −d ln Ū'(e^y)/dy` at `y = ln x`, by Richardson-extrapolated
    /// central differences of [`Self::log_marginal_bar`].
    pub fn rra_bar_numeric(&self, x: f64) -> f64 {
        let y = x.ln();
        let f = |t: f64| self.log_marginal_bar(t.exp());
        let d = |h: f64| (f(y + h) - f(y - h)) / (2.0 * h);
        let h = 0.02;
        let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
        // Eliminate h² then h⁴ terms.
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        -((16.0 * r2 - r1) / 15.0)
    }

    /// Discrepancy between the closed-form and numerical `RRA[Ū](x)`.
    pub fn check(&self, x: f64) -> f64 {
        (self.rra_bar(x) - self.rra_bar_numeric(x)).abs()
    }
}
