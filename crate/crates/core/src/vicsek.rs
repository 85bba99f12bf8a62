//! Exact spectral sums for Vicsek fractals by eigenvalue descent.
//!
//! Every nonzero eigenvalue `lambda` of generation `g` has three children in
//! generation `g + 1`, the roots of `x (x - 3) (x - v - 1) = lambda`. Vieta's
//! formulas then give `sum 1/child = 3(v+1)/lambda` and
//! `sum 1/child^2 = (3(v+1))^2/lambda^2 - 2(v+4)/lambda`, so the reciprocal
//! sums of each lineage follow a linear recursion and never need the roots.

use nalgebra::Matrix3;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Caps;
use crate::truncpoly::int;

/// Largest generation accepted by the exact routines.
pub const MAX_GENERATION: u32 = 512;

fn check_v(v: u32) -> Result<()> {
    if v < 2 {
        return Err(Error::InvalidParameter(format!("Vicsek requires v >= 2, got {v}")));
    }
    Ok(())
}

fn check_vg(v: u32, g: u32) -> Result<()> {
    check_v(v)?;
    if g == 0 || g > MAX_GENERATION {
        return Err(Error::InvalidParameter(format!(
            "generation must be in 1..={MAX_GENERATION}, got {g}"
        )));
    }
    Ok(())
}

fn big_pow(base: u32, exp: u32) -> BigInt {
    BigInt::from(base).pow(exp)
}

fn rat(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

/// The three real roots of `x^3 - (v+4) x^2 + 3(v+1) x - lambda`, ascending.
///
/// Roots come from the eigenvalues of the companion matrix and each gets one
/// Newton step. A root with a non-negligible imaginary part means the parent
/// was not a Laplacian eigenvalue of the previous generation, which is
/// reported as an invariant violation.
pub fn cubic_children(lambda: f64, v: u32) -> Result<[f64; 3]> {
    check_v(v)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("parent eigenvalue must be >= 0, got {lambda}")));
    }
    let a2 = (v + 4) as f64;
    let a1 = 3.0 * (v + 1) as f64;
    let companion = Matrix3::new(
        a2, -a1, lambda, //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0,
    );
    let eig = companion.complex_eigenvalues();
    let scale = a2.max(lambda.cbrt());
    let mut roots = [0.0; 3];
    for (r, z) in roots.iter_mut().zip(eig.iter()) {
        // Near a double root the imaginary part can reach sqrt(eps) * scale.
        if z.im.abs() > 1e-6 * scale {
            return Err(Error::Invariant(format!(
                "cubic child of {lambda} (v = {v}) is complex: {z}"
            )));
        }
        let mut x = z.re;
        let p = ((x - a2) * x + a1) * x - lambda;
        let dp = (3.0 * x - 2.0 * a2) * x + a1;
        if dp.abs() > 1e-8 * scale * scale {
            x -= p / dp;
        }
        *r = x;
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// `(sum 1/c, sum 1/c^2)` over the computed children of `lambda > 0`.
pub fn child_sums(lambda: f64, v: u32) -> Result<(f64, f64)> {
    let c = cubic_children(lambda, v)?;
    Ok((
        c.iter().map(|x| 1.0 / x).sum(),
        c.iter().map(|x| 1.0 / (x * x)).sum(),
    ))
}

/// The same sums from Vieta's formulas.
pub fn expected_child_sums(lambda: f64, v: u32) -> (f64, f64) {
    let c = 3.0 * (v + 1) as f64;
    (c / lambda, c * c / (lambda * lambda) - 2.0 * (v + 4) as f64 / lambda)
}

/// Multiplicity of the eigenvalue 1 in generation `k`:
/// `(v-2)(v+1)^(k-1) + 1`.
pub fn delta(v: u32, k: u32) -> Result<BigInt> {
    check_vg(v, k)?;
    Ok(BigInt::from(v - 2) * big_pow(v + 1, k - 1) + BigInt::one())
}

/// `Gamma_i = 3^i (v+1)^(i-1)`: reciprocal sum over the generation-`i`
/// descendants of the eigenvalue `v+1`.
pub fn gamma_nd(v: u32, i: u32) -> BigRational {
    BigRational::new(big_pow(3 * (v + 1), i), BigInt::from(v + 1))
}

/// `Gamma'_i = 3^i (v+1)^i`: the same for descendants of one eigenvalue 1.
pub fn gamma_deg(v: u32, i: u32) -> BigRational {
    rat(big_pow(3 * (v + 1), i))
}

fn theta_step(v: u32, prev: &BigRational, gamma_prev: &BigRational) -> BigRational {
    let c = int(3 * (v as i64 + 1));
    &c * &c * prev - int(2 * (v as i64 + 4)) * gamma_prev
}

/// Squared-reciprocal sums `theta_0..theta_{count-1}` for the lineage of
/// `v+1`, from `theta_0 = 1/(v+1)^2`.
pub fn theta_nd_series(v: u32, count: u32) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = BigRational::new(BigInt::one(), big_pow(v + 1, 2));
    for i in 0..count {
        if i > 0 {
            cur = theta_step(v, &cur, &gamma_nd(v, i - 1));
        }
        out.push(cur.clone());
    }
    out
}

/// Squared-reciprocal sums `theta'_0..` for the lineage of one eigenvalue 1.
pub fn theta_deg_series(v: u32, count: u32) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = BigRational::one();
    for i in 0..count {
        if i > 0 {
            cur = theta_step(v, &cur, &gamma_deg(v, i - 1));
        }
        out.push(cur.clone());
    }
    out
}

pub fn theta_nd(v: u32, i: u32) -> BigRational {
    theta_nd_series(v, i + 1).pop().unwrap_or_else(BigRational::zero)
}

pub fn theta_deg(v: u32, i: u32) -> BigRational {
    theta_deg_series(v, i + 1).pop().unwrap_or_else(BigRational::zero)
}

/// Closed-form solutions of the two theta recursions, `A c^(2i) + B c^i`
/// with `c = 3(v+1)`.
///
/// Returns `(theta_i, theta'_i)`.
pub fn theta_closed_forms(v: u32, i: u32) -> (BigRational, BigRational) {
    let c = big_pow(3 * (v + 1), 1);
    let b_deg = BigRational::new(
        BigInt::from(2 * (v + 4)),
        &c * (&c - BigInt::one()),
    );
    let b_nd = &b_deg / int(v as i64 + 1);
    let a_nd = BigRational::new(BigInt::one(), big_pow(v + 1, 2)) - &b_nd;
    let a_deg = BigRational::one() - &b_deg;
    let ci = rat(c.pow(i));
    let c2i = &ci * &ci;
    (&a_nd * &c2i + &b_nd * &ci, &a_deg * &c2i + &b_deg * &ci)
}

/// Exact Gamma/theta/Delta tables and the resulting sums for one generation.
///
/// `gamma_nd`, `gamma_deg`, `theta_nd` and `theta_deg` are indexed by
/// descent depth `i = 0..g-1`; `delta[k-1]` holds `Delta_k` for `k = 1..=g`.
#[derive(Clone, Debug, PartialEq)]
pub struct VicsekSums {
    pub v: u32,
    pub g: u32,
    pub gamma_nd: Vec<BigRational>,
    pub gamma_deg: Vec<BigRational>,
    pub theta_nd: Vec<BigRational>,
    pub theta_deg: Vec<BigRational>,
    pub delta: Vec<BigInt>,
    pub s: BigRational,
    pub s2: BigRational,
}

impl VicsekSums {
    pub fn new(v: u32, g: u32) -> Result<Self> {
        check_vg(v, g)?;
        let gamma_nd: Vec<_> = (0..g).map(|i| gamma_nd(v, i)).collect();
        let gamma_deg: Vec<_> = (0..g).map(|i| gamma_deg(v, i)).collect();
        let theta_nd = theta_nd_series(v, g);
        let theta_deg = theta_deg_series(v, g);
        let delta = (1..=g).map(|k| delta(v, k)).collect::<Result<Vec<_>>>()?;

        // The degenerate lineage at depth i started from Delta_{g-i} ones.
        let weight = |i: usize| rat(delta[g as usize - i - 1].clone());
        let mut s = BigRational::zero();
        let mut s2 = BigRational::zero();
        for i in 0..g as usize {
            s += &gamma_nd[i] + weight(i) * &gamma_deg[i];
            s2 += &theta_nd[i] + weight(i) * &theta_deg[i];
        }
        Ok(Self {
            v,
            g,
            gamma_nd,
            gamma_deg,
            theta_nd,
            theta_deg,
            delta,
            s,
            s2,
        })
    }

    pub fn num_nodes(&self) -> BigInt {
        big_pow(self.v + 1, self.g)
    }

    /// Reciprocal sum over the descendants of `v+1` alone.
    pub fn nondegenerate_s(&self) -> BigRational {
        self.gamma_nd.iter().sum()
    }
}

pub fn vicsek_sums(v: u32, g: u32) -> Result<VicsekSums> {
    VicsekSums::new(v, g)
}

pub fn vicsek_s(v: u32, g: u32) -> Result<BigRational> {
    Ok(VicsekSums::new(v, g)?.s)
}

pub fn vicsek_s2(v: u32, g: u32) -> Result<BigRational> {
    Ok(VicsekSums::new(v, g)?.s2)
}

/// `(v-2)(v+1)^(g-1)(3^g-1)/2 + ((v+2)/(v+1)) (3^g (v+1)^g - 1)/(3v+2)`.
pub fn s_closed_form(v: u32, g: u32) -> Result<BigRational> {
    check_vg(v, g)?;
    let first = BigRational::new(
        BigInt::from(v - 2) * big_pow(v + 1, g - 1) * (big_pow(3, g) - BigInt::one()),
        BigInt::from(2),
    );
    let second = BigRational::new(
        BigInt::from(v + 2) * (big_pow(3 * (v + 1), g) - BigInt::one()),
        BigInt::from(v + 1) * BigInt::from(3 * v + 2),
    );
    Ok(first + second)
}

/// `(1/(v+1)) (3^g (v+1)^g - 1)/(3v+2)`, the sum of all `Gamma_i`.
pub fn nondegenerate_closed_form(v: u32, g: u32) -> Result<BigRational> {
    check_vg(v, g)?;
    Ok(BigRational::new(
        big_pow(3 * (v + 1), g) - BigInt::one(),
        BigInt::from(v + 1) * BigInt::from(3 * v + 2),
    ))
}

/// Analytic exponents of `H_FO` and `H_SO` in `N`:
/// `log 3 / log(v+1)` and `1 + 2 log 3 / log(v+1)`.
pub fn vicsek_coherence_exponents(v: u32) -> (f64, f64) {
    let a = 3f64.ln() / ((v + 1) as f64).ln();
    (a, 1.0 + 2.0 * a)
}

/// A Laplacian spectrum stored as distinct levels with multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VicsekSpectrum {
    pub v: u32,
    pub g: u32,
    /// `(eigenvalue, multiplicity)`; the eigenvalue 1 is a single level.
    pub levels: Vec<(f64, u64)>,
}

impl VicsekSpectrum {
    pub fn total_multiplicity(&self) -> u64 {
        self.levels.iter().map(|&(_, m)| m).sum()
    }

    pub fn multiplicity_of(&self, x: f64, tol: f64) -> u64 {
        self.levels
            .iter()
            .filter(|&&(l, _)| (l - x).abs() <= tol)
            .map(|&(_, m)| m)
            .sum()
    }

    /// All eigenvalues, ascending, repeated by multiplicity.
    pub fn to_sorted_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_multiplicity() as usize);
        for &(l, m) in &self.levels {
            out.extend(std::iter::repeat_n(l, m as usize));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn inverse_sums(&self) -> (f64, f64) {
        self.levels
            .iter()
            .filter(|&&(l, _)| l != 0.0)
            .fold((0.0, 0.0), |(s, s2), &(l, m)| {
                (s + m as f64 / l, s2 + m as f64 / (l * l))
            })
    }
}

fn star_spectrum(v: u32) -> VicsekSpectrum {
    VicsekSpectrum {
        v,
        g: 1,
        levels: vec![(0.0, 1), ((v + 1) as f64, 1), (1.0, (v - 1) as u64)],
    }
}

/// One generation of descent.
///
/// Generation `g + 1` consists of 0 and `v+1`, the three children of every
/// nonzero eigenvalue of generation `g` (ones included) with the parent's
/// multiplicity, and `Delta_{g+1}` copies of 1. The count of ones is forced by
/// conservation: `2 + 3(N_g - 1) + Delta_{g+1} = (v+1) N_g`.
pub fn advance_spectrum(prev: &VicsekSpectrum) -> Result<VicsekSpectrum> {
    let v = prev.v;
    let g = prev.g + 1;
    let mut levels = vec![(0.0, 1), ((v + 1) as f64, 1)];
    for &(l, m) in &prev.levels {
        if l == 0.0 {
            continue;
        }
        for c in cubic_children(l, v)? {
            levels.push((c, m));
        }
    }
    let ones: u64 = delta(v, g)?
        .try_into()
        .map_err(|_| Error::CapExceeded {
            what: "eigenvalue multiplicity",
            requested: u128::MAX,
            cap: u64::MAX as usize,
        })?;
    levels.push((1.0, ones));

    let next = VicsekSpectrum { v, g, levels };
    let expected = (v as u64 + 1).pow(g);
    if next.total_multiplicity() != expected {
        return Err(Error::Invariant(format!(
            "reconstructed generation {g} has {} eigenvalues, expected {expected}",
            next.total_multiplicity()
        )));
    }
    let found = next.multiplicity_of(1.0, 1e-9);
    if found != ones {
        return Err(Error::Invariant(format!(
            "eigenvalue 1 has multiplicity {found} at generation {g}, expected {ones}"
        )));
    }
    Ok(next)
}

/// Full spectrum of generation `g` by repeated descent from the star.
pub fn reconstruct_spectrum(v: u32, g: u32, caps: &Caps) -> Result<VicsekSpectrum> {
    check_vg(v, g)?;
    caps.check_nodes((v as u128 + 1).checked_pow(g).unwrap_or(u128::MAX))?;
    let mut spec = star_spectrum(v);
    while spec.g < g {
        spec = advance_spectrum(&spec)?;
    }
    Ok(spec)
}
