//! Dense Laplacian eigenvalues and the sums derived from them.
//!
//! This is the floating-point reference that the exact recursions are
//! compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Caps;
use crate::graph::{Graph, Laplacian};

/// Relative tolerance for the trace and Frobenius-norm checks on a computed
/// spectrum.
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Multiplier in the default zero tolerance `ZERO_TOL_FACTOR * N * max|lambda|`.
pub const ZERO_TOL_FACTOR: f64 = 1e-12;

pub fn eigenvalues(l: &Laplacian) -> Result<Vec<f64>> {
    eigenvalues_capped(l, &Caps::default())
}

/// Ascending eigenvalues of a symmetric matrix.
///
/// The result is checked against two invariants of the decomposition,
/// `sum lambda = tr L` and `sum lambda^2 = ||L||_F^2`, each to a relative
/// `1e-8` of `N max|lambda|` (resp. `N max|lambda|^2`).
pub fn eigenvalues_capped(l: &Laplacian, caps: &Caps) -> Result<Vec<f64>> {
    let m = l.matrix();
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSymmetric);
    }
    caps.check_dense(n)?;
    let scale = m.amax();
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);

    let max_abs = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sum: f64 = vals.iter().sum();
    let sum_sq: f64 = vals.iter().map(|v| v * v).sum();
    let frob_sq = m.norm_squared();
    let n_f = n as f64;
    if (sum - m.trace()).abs() > RECONSTRUCTION_TOL * n_f * max_abs.max(f64::MIN_POSITIVE)
        || (sum_sq - frob_sq).abs() > RECONSTRUCTION_TOL * n_f * (max_abs * max_abs).max(f64::MIN_POSITIVE)
    {
        return Err(Error::Invariant(format!(
            "eigendecomposition residual too large: sum {sum} vs trace {}, sum of squares {sum_sq} vs {frob_sq}",
            m.trace()
        )));
    }
    Ok(vals)
}

/// Sorted Laplacian spectrum of a connected graph with its reciprocal sums
/// `S = sum 1/lambda_i` and `S2 = sum 1/lambda_i^2` over the nonzero
/// eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub zero_tolerance: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
}

impl SpectrumSummary {
    /// Uses the default tolerance `1e-12 * N * max|lambda|`.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len() as f64;
        let max_abs = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Self::with_tolerance(eigenvalues, ZERO_TOL_FACTOR * n * max_abs)
    }

    /// Requires exactly one eigenvalue within `zero_tolerance` of zero.
    pub fn with_tolerance(mut eigenvalues: Vec<f64>, zero_tolerance: f64) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::TooFewNodes {
                min: 2,
                got: eigenvalues.len(),
            });
        }
        eigenvalues.sort_by(f64::total_cmp);
        let zeros = eigenvalues.iter().filter(|v| v.abs() <= zero_tolerance).count();
        if zeros != 1 {
            return Err(Error::ZeroEigenvalues(zeros));
        }
        if eigenvalues[0] < -zero_tolerance {
            return Err(Error::Invariant(format!(
                "negative Laplacian eigenvalue {}",
                eigenvalues[0]
            )));
        }
        let nonzero = &eigenvalues[1..];
        let s = nonzero.iter().map(|l| 1.0 / l).sum();
        let s2 = nonzero.iter().map(|l| 1.0 / (l * l)).sum();
        Ok(Self {
            eigenvalues,
            zero_tolerance,
            s,
            s2,
        })
    }

    pub fn of_graph(g: &Graph, caps: &Caps) -> Result<Self> {
        Self::from_eigenvalues(eigenvalues_capped(&g.laplacian(), caps)?)
    }

    pub fn num_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The eigenvalues above the zero eigenvalue, ascending.
    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }

    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn inverse_sum(&self) -> f64 {
        self.s
    }

    pub fn inverse_square_sum(&self) -> f64 {
        self.s2
    }

    /// `rho(x)`: how many eigenvalues are `<= x`, with a slack of
    /// `zero_tolerance` so that the numerical zero and exactly representable
    /// eigenvalues (1, 2, ...) land on the right side.
    pub fn counting_function(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= x + self.zero_tolerance)
    }
}

pub fn inverse_sum(spec: &SpectrumSummary) -> f64 {
    spec.inverse_sum()
}

pub fn inverse_square_sum(spec: &SpectrumSummary) -> f64 {
    spec.inverse_square_sum()
}

pub fn counting_function(spec: &SpectrumSummary, x: f64) -> usize {
    spec.counting_function(x)
}
