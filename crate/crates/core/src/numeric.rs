//! Scalar root finding and summation helpers shared by the solvers.
//!
//! Every scalar equation in this crate is a strictly decreasing function of
//! one variable (inverse marginals, the aggregate equation behind `G⁻¹`,
//! budget constraints). [`solve_decreasing`] exploits that: it expands a
//! bracket geometrically from a starting point and then runs a Newton
//! iteration safeguarded by bisection, so it cannot leave the bracket.

use std::fmt;

use thiserror::Error;

/// Failure modes of [`solve_decreasing`], with the bracket at the time of
/// failure for diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change found after {expansions} expansions (last point {x}, value {fx})")]
    BracketNotFound { expansions: usize, x: f64, fx: f64 },

    #[error("no convergence in {iterations} iterations (bracket [{lo}, {hi}], best {best}, residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        best: f64,
        residual: f64,
    },

    #[error("function returned a non-finite value at {x}")]
    NonFinite { x: f64 },
}

/// Stopping rules for [`solve_decreasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTolerance {
    /// Absolute residual at which the iteration stops.
    pub ftol: f64,
    /// Relative bracket width at which the iteration stops.
    pub xtol: f64,
    pub max_iter: usize,
    pub max_expansions: usize,
}

impl Default for RootTolerance {
    fn default() -> Self {
        RootTolerance {
            ftol: 1e-14,
            xtol: 4.0 * f64::EPSILON,
            max_iter: 200,
            max_expansions: 200,
        }
    }
}

impl RootTolerance {
    pub fn with_ftol(ftol: f64) -> Self {
        RootTolerance {
            ftol,
            ..Default::default()
        }
    }
}

/// Located root together with the work it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub evaluations: usize,
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (residual {:e})", self.x, self.residual)
    }
}

/// Finds the zero of a strictly decreasing function.
///
/// `f` returns the value and the derivative at a point. The bracket is
/// grown from `start` in steps `step, 2·step, 4·step, …` in the direction
/// indicated by the sign of `f(start)`; afterwards each iteration takes the
/// Newton step when it lands strictly inside the bracket and shrinks the
/// residual fast enough, and bisects otherwise.
pub fn solve_decreasing<F>(
    mut f: F,
    start: f64,
    step: f64,
    tol: &RootTolerance,
) -> Result<Root, RootError>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut evaluations = 0usize;
    let mut eval = |x: f64| -> Result<(f64, f64), RootError> {
        evaluations += 1;
        let (fx, dfx) = f(x);
        if fx.is_finite() {
            Ok((fx, dfx))
        } else {
            Err(RootError::NonFinite { x })
        }
    };

    let (f0, d0) = eval(start)?;
    if f0.abs() <= tol.ftol {
        return Ok(Root {
            x: start,
            residual: f0.abs(),
            evaluations: 1,
        });
    }

    // lo has f > 0, hi has f < 0 (decreasing function, so lo < hi).
    let step = if step > 0.0 { step } else { 1.0 };
    let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
    let (mut lo, flo, mut hi, fhi);
    let mut inner = (start, f0);
    let mut width = step;
    let mut expansions = 0usize;
    loop {
        let x = start + dir * width;
        let (fx, _) = eval(x)?;
        if (fx > 0.0) != (f0 > 0.0) || fx == 0.0 {
            if dir > 0.0 {
                lo = inner.0;
                flo = inner.1;
                hi = x;
                fhi = fx;
            } else {
                lo = x;
                flo = fx;
                hi = inner.0;
                fhi = inner.1;
            }
            break;
        }
        inner = (x, fx);
        expansions += 1;
        if expansions >= tol.max_expansions {
            return Err(RootError::BracketNotFound { expansions, x, fx });
        }
        width *= 2.0;
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            evaluations,
        });
    }

    // Start Newton from whichever end is closer in residual, or from the
    // original point when it sits inside the bracket.
    let (mut x, mut fx, mut dfx) = if start > lo && start < hi {
        (start, f0, d0)
    } else if flo.abs() < fhi.abs() {
        let (v, d) = eval(lo)?;
        (lo, v, d)
    } else {
        let (v, d) = eval(hi)?;
        (hi, v, d)
    };
    let mut best = (x, fx.abs());
    let mut prev_dx = hi - lo;
    let mut dx = prev_dx;

    for _ in 0..tol.max_iter {
        let newton = if dfx < 0.0 && dfx.is_finite() {
            Some(x - fx / dfx)
        } else {
            None
        };
        let take_newton = match newton {
            Some(xn) => xn > lo && xn < hi && (fx / dfx).abs() * 2.0 <= prev_dx.abs(),
            None => false,
        };
        prev_dx = dx;
        let next = if take_newton {
            newton.unwrap()
        } else {
            0.5 * (lo + hi)
        };
        dx = next - x;
        if next == x || next <= lo || next >= hi {
            // Bracket has collapsed to adjacent floats.
            return Ok(Root {
                x: best.0,
                residual: best.1,
                evaluations,
            });
        }
        x = next;
        let (v, d) = eval(x)?;
        fx = v;
        dfx = d;
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx.abs() <= tol.ftol {
            return Ok(Root {
                x,
                residual: fx.abs(),
                evaluations,
            });
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol.xtol * (1.0 + lo.abs().max(hi.abs())) {
            return Ok(Root {
                x: best.0,
                residual: best.1,
                evaluations,
            });
        }
    }
    Err(RootError::NoConvergence {
        iterations: tol.max_iter,
        lo,
        hi,
        best: best.0,
        residual: best.1,
    })
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Largest absolute entry, 0 for an empty slice.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
