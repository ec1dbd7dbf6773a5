//! Small dense linear algebra in the ∞-operator norm.
//!
//! Storage and LU factorisation come from `nalgebra`; the pivot test and the
//! two perturbation bounds used throughout the invertibility arguments
//! (Neumann-series perturbation of an inverse, and the inverse bound for
//! strictly diagonally dominant matrices) live here so they can be checked
//! numerically on their own.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative pivot tolerance for [`SquareMatrix::solve`].
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Dense `n × n` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SquareMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(SquareMatrix(DMatrix::from_row_slice(n, n, entries)))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        SquareMatrix(DMatrix::from_fn(n, n, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Operator norm induced by the ∞-norm: the largest row 1-norm.
    pub fn inf_op_norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 * &other.0)
    }

    pub fn sub(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 - &other.0)
    }

    pub fn add(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 + &other.0)
    }

    pub fn scale(&self, c: f64) -> SquareMatrix {
        SquareMatrix(&self.0 * c)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    fn lu_checked(&self) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let n = self.dim();
        let lu = self.0.clone().lu();
        let u = lu.u();
        for j in 0..n {
            let scale = (0..n).map(|i| self.0[(i, j)].abs()).fold(0.0, f64::max);
            let pivot = u[(j, j)].abs();
            if !(pivot > PIVOT_TOLERANCE * scale) || !pivot.is_finite() {
                return Err(Error::SingularMatrix);
            }
        }
        Ok(lu)
    }

    /// Solves `M x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let lu = self.lu_checked()?;
        let rhs = nalgebra::DVector::from_column_slice(b);
        let x = lu.solve(&rhs).ok_or(Error::SingularMatrix)?;
        Ok(x.iter().copied().collect())
    }

    pub fn inverse(&self) -> Result<SquareMatrix> {
        let lu = self.lu_checked()?;
        lu.try_inverse().map(SquareMatrix).ok_or(Error::SingularMatrix)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.0[idx]
    }
}

/// Free-function form of [`SquareMatrix::inf_op_norm`].
pub fn inf_op_norm(m: &SquareMatrix) -> f64 {
    m.inf_op_norm()
}

/// Free-function form of [`SquareMatrix::solve`].
pub fn solve_linear(m: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    m.solve(b)
}

/// Outcome of a numerical check of an inverse-norm inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Whether the hypothesis was met and the inequality held numerically.
    pub holds: bool,
    pub precondition: bool,
    /// The theoretical bound (NaN when the precondition fails).
    pub bound: f64,
    /// The numerically observed left-hand side (NaN when not computed).
    pub observed: f64,
}

const ROUNDOFF_SLACK: f64 = 1e-12;

/// Perturbed-inverse bound: if `‖S − T‖ ≤ eps·‖S⁻¹‖⁻¹` with `0 < eps < 1`,
/// then `T` is invertible and `‖S⁻¹ − T⁻¹‖ ≤ eps/(1−eps)·‖S⁻¹‖`.
pub fn perturbed_inverse_bound(s: &SquareMatrix, t: &SquareMatrix, eps: f64) -> BoundCheck {
    let fail = BoundCheck {
        holds: false,
        precondition: false,
        bound: f64::NAN,
        observed: f64::NAN,
    };
    if !(eps > 0.0 && eps < 1.0) || s.dim() != t.dim() {
        return fail;
    }
    let Ok(s_inv) = s.inverse() else {
        return fail;
    };
    let s_inv_norm = s_inv.inf_op_norm();
    if s.sub(t).inf_op_norm() > eps / s_inv_norm {
        return fail;
    }
    let bound = eps / (1.0 - eps) * s_inv_norm;
    match t.inverse() {
        Ok(t_inv) => {
            let observed = s_inv.sub(&t_inv).inf_op_norm();
            BoundCheck {
                holds: observed <= bound * (1.0 + ROUNDOFF_SLACK) + ROUNDOFF_SLACK,
                precondition: true,
                bound,
                observed,
            }
        }
        Err(_) => BoundCheck {
            holds: false,
            precondition: true,
            bound,
            observed: f64::INFINITY,
        },
    }
}

/// Inverse bound for strictly diagonally dominant matrices: if
/// `m_ii − Σ_{j≠i}|m_ij| ≥ eps > 0` for all rows, then `‖M⁻¹‖ ≤ 1/eps`.
pub fn diag_dominant_inverse_bound(m: &SquareMatrix, eps: f64) -> BoundCheck {
    let n = m.dim();
    let dominant = eps > 0.0
        && (0..n).all(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] > 0.0 && m[(i, i)] - off >= eps
        });
    if !dominant {
        return BoundCheck {
            holds: false,
            precondition: false,
            bound: f64::NAN,
            observed: f64::NAN,
        };
    }
    let bound = 1.0 / eps;
    match m.inverse() {
        Ok(inv) => {
            let observed = inv.inf_op_norm();
            BoundCheck {
                holds: observed <= bound * (1.0 + ROUNDOFF_SLACK),
                precondition: true,
                bound,
                observed,
            }
        }
        Err(_) => BoundCheck {
            holds: false,
            precondition: true,
            bound,
            observed: f64::INFINITY,
        },
    }
}
