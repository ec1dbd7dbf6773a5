//! Finite-atom complete market.
//!
//! The market enters the equilibrium problem only through the state-price
//! density `Z = dQ/dP`, so it is represented as `K` atoms with physical
//! probabilities `p_k` and density values `z_k`. Every expectation is a
//! finite sum.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

const PROB_SUM_TOL: f64 = 1e-14;
const DENSITY_SUM_TOL: f64 = 1e-12;
const MIN_WEIGHT: f64 = 1e-300;

/// Atomic probability space carrying the state-price density.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    p: Vec<f64>,
    z: Vec<f64>,
    log_z: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomRecord {
    p: f64,
    z: f64,
}

impl Market {
    /// Validates probabilities and densities: `p_k > 0`, `Σ p = 1`,
    /// `z_k > 0` and `Σ p z = 1`.
    pub fn new(p: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidMarket("market needs at least one atom".into()));
        }
        if p.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: z.len(),
            });
        }
        if let Some(k) = p.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidMarket(format!(
                "probability of atom {k} must be positive, got {}",
                p[k]
            )));
        }
        if let Some(k) = z.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidMarket(format!(
                "density of atom {k} must be positive, got {}",
                z[k]
            )));
        }
        let total = compensated_sum(p.iter().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidMarket(format!(
                "probabilities sum to {total:.17}, not 1"
            )));
        }
        let mass = compensated_sum(p.iter().zip(&z).map(|(a, b)| a * b));
        if (mass - 1.0).abs() > DENSITY_SUM_TOL {
            return Err(Error::InvalidMarket(format!(
                "E_P[Z] = {mass:.17}, density must integrate to 1"
            )));
        }
        let log_z = z.iter().map(|v| v.ln()).collect();
        Ok(Market { p, z, log_z })
    }

    /// Gauss–Hermite discretisation of `ln Z ~ N(−θ²T/2, θ²T)` under `P`.
    ///
    /// Weights below 1e-300 are dropped, probabilities renormalised, and `z`
    /// rescaled so that `Σ p z = 1` holds exactly up to rounding.
    pub fn lognormal(theta: f64, horizon: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidMarket(format!("need at least 2 nodes, got {nodes}")));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidMarket(format!("theta must be >= 0, got {theta}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidMarket(format!("horizon must be > 0, got {horizon}")));
        }
        let variance = theta * theta * horizon;
        let mean = -0.5 * variance;
        let scale = (2.0 * variance).sqrt();
        let (x, w) = gauss_hermite(nodes);
        let kept: Vec<(f64, f64)> = x
            .into_iter()
            .zip(w)
            .filter(|(_, w)| *w / std::f64::consts::PI.sqrt() >= MIN_WEIGHT)
            .collect();
        let wsum = compensated_sum(kept.iter().map(|(_, w)| *w));
        let p: Vec<f64> = kept.iter().map(|(_, w)| w / wsum).collect();
        let mut z: Vec<f64> = kept.iter().map(|(x, _)| (mean + scale * x).exp()).collect();
        let mass = compensated_sum(p.iter().zip(&z).map(|(a, b)| a * b));
        for v in &mut z {
            *v /= mass;
        }
        Market::new(p, z)
    }

    pub fn atom_count(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn log_z(&self) -> &[f64] {
        &self.log_z
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.p.len() {
            return Err(Error::DimensionMismatch {
                expected: self.p.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `E_P[f] = Σ p_k f_k`.
    pub fn expect_p(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.expect_p_with(|k| f[k]))
    }

    /// `E^Q[f] = Σ p_k z_k f_k`.
    pub fn expect_q(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.expect_q_with(|k| f[k]))
    }

    /// `E_P` of a function of the atom index.
    pub fn expect_p_with(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        compensated_sum((0..self.p.len()).map(|k| self.p[k] * f(k)))
    }

    /// `E^Q` of a function of the atom index.
    pub fn expect_q_with(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        compensated_sum((0..self.p.len()).map(|k| self.p[k] * self.z[k] * f(k)))
    }

    /// Reads a market from CSV with header `p,z`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut p = Vec::new();
        let mut z = Vec::new();
        for rec in rdr.deserialize() {
            let rec: AtomRecord = rec?;
            p.push(rec.p);
            z.push(rec.z);
        }
        Market::new(p, z)
    }

    /// Writes the market as CSV with header `p,z`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["p", "z"])?;
        for (p, z) in self.p.iter().zip(&self.z) {
            wtr.write_record([format!("{p:.16e}"), format!("{z:.16e}")])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for `∫ e^{−x²} f(x) dx`,
/// nodes in decreasing order.
///
/// Roots are found by Newton iteration on the orthonormal Hermite
/// recurrence, seeded with the usual asymptotic guesses.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // π^{-1/4}
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}
