//! Generation recursions for the low-order characteristic-polynomial
//! coefficients of tree-like fractals.
//!
//! Three polynomials are tracked per generation, each truncated mod `x^3`:
//! `Pbar` (the Laplacian characteristic polynomial divided by `x`), `Q` (one
//! outermost node removed) and `R` (two outermost nodes removed). From the
//! coefficients of `Pbar` alone,
//!
//! ```text
//! S  = sum 1/lambda   = -p1/p0
//! S2 = sum 1/lambda^2 = (p1/p0)^2 - 2 p2/p0
//! ```
//!
//! Generation 1 is the `(m+3)`-node star; generation 0 (the two-node seed) is
//! not representable here since its `Pbar` has no `Q`/`R` companions.
//!
//! Everything in this module is exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::truncpoly::{int, TruncPoly};

/// Upper bound on the generation index accepted by the recursion drivers.
pub const MAX_GENERATION: u32 = 512;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeRecursionState {
    m: u32,
    g: u32,
    pbar: TruncPoly,
    q: TruncPoly,
    r: TruncPoly,
}

impl TreeRecursionState {
    /// Expands the generation-1 products
    /// `Pbar = (x - (m+3))(1-x)^(m+1)`, `Q = (1 - (m+3)x + x^2)(1-x)^m`,
    /// `R = (2 - (m+3)x + x^2)(1-x)^(m-1)`.
    pub fn generation1(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("tree-like fractal needs m >= 1".into()));
        }
        let mi = i64::from(m);
        let one_minus_x = TruncPoly::from_ints(1, -1, 0);
        let pbar = &TruncPoly::from_ints(-(mi + 3), 1, 0) * &one_minus_x.pow(m + 1);
        let q = &TruncPoly::from_ints(1, -(mi + 3), 1) * &one_minus_x.pow(m);
        // m = 1 gives (1-x)^0 = 1.
        let r = &TruncPoly::from_ints(2, -(mi + 3), 1) * &one_minus_x.pow(m - 1);
        Ok(Self { m, g: 1, pbar, q, r })
    }

    /// One generation step:
    ///
    /// ```text
    /// Pbar' = (m+2) Q^(m+1) Pbar + (m+1) Q^(m+2)
    /// Q'    = Q^(m+2) + (m+1) x R Q^(m+1) + (m+1) x R Q^m Pbar
    /// R'    = 2 R Q^(m+1) + (m+1) x R^2 Q^m + m x R^2 Q^(m-1) Pbar
    /// ```
    pub fn advance(&self) -> Self {
        let m = self.m;
        let mi = i64::from(m);
        let q_m1 = self.q.pow(m - 1);
        let q_m = &q_m1 * &self.q;
        let q_m1p = &q_m * &self.q; // Q^(m+1)
        let q_m2p = &q_m1p * &self.q; // Q^(m+2)
        let r2 = &self.r * &self.r;

        let pbar = (&q_m1p * &self.pbar).scale_int(mi + 2) + q_m2p.scale_int(mi + 1);

        let xr = self.r.shift();
        let q = &q_m2p
            + &(&xr * &q_m1p).scale_int(mi + 1)
            + (&(&xr * &q_m) * &self.pbar).scale_int(mi + 1);

        let xr2 = r2.shift();
        let r = (&self.r * &q_m1p).scale_int(2)
            + (&xr2 * &q_m).scale_int(mi + 1)
            + (&(&xr2 * &q_m1) * &self.pbar).scale_int(mi);

        Self {
            m,
            g: self.g + 1,
            pbar,
            q,
            r,
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn generation(&self) -> u32 {
        self.g
    }

    pub fn pbar(&self) -> &TruncPoly {
        &self.pbar
    }

    pub fn q(&self) -> &TruncPoly {
        &self.q
    }

    pub fn r(&self) -> &TruncPoly {
        &self.r
    }

    /// `(m+2)^g + 1`.
    pub fn num_nodes(&self) -> BigInt {
        BigInt::from(self.m + 2).pow(self.g) + 1
    }

    pub fn s(&self) -> BigRational {
        -(self.pbar.coeff(1) / self.pbar.coeff(0))
    }

    pub fn s2(&self) -> BigRational {
        let ratio = self.pbar.coeff(1) / self.pbar.coeff(0);
        &ratio * &ratio - int(2) * self.pbar.coeff(2) / self.pbar.coeff(0)
    }
}

pub fn init_generation1(m: u32) -> Result<TreeRecursionState> {
    TreeRecursionState::generation1(m)
}

pub fn advance_generation(state: &TreeRecursionState) -> TreeRecursionState {
    state.advance()
}

/// The recursion state at generation `g >= 1`.
pub fn tree_state(m: u32, g: u32) -> Result<TreeRecursionState> {
    if g == 0 {
        return Err(Error::InvalidParameter(
            "tree recursion starts at generation 1".into(),
        ));
    }
    if g > MAX_GENERATION {
        return Err(Error::InvalidParameter(format!(
            "generation {g} exceeds the recursion limit {MAX_GENERATION}"
        )));
    }
    let mut state = TreeRecursionState::generation1(m)?;
    while state.g < g {
        state = state.advance();
    }
    Ok(state)
}

pub fn tree_s(m: u32, g: u32) -> Result<BigRational> {
    Ok(tree_state(m, g)?.s())
}

pub fn tree_s2(m: u32, g: u32) -> Result<BigRational> {
    Ok(tree_state(m, g)?.s2())
}

/// States for generations `1..=g_max`.
pub fn tree_states(m: u32, g_max: u32) -> Result<Vec<TreeRecursionState>> {
    if g_max == 0 || g_max > MAX_GENERATION {
        return Err(Error::InvalidParameter(format!(
            "generation must be in 1..={MAX_GENERATION}, got {g_max}"
        )));
    }
    let last = tree_state(m, 1)?;
    let mut out = vec![last];
    while out.len() < g_max as usize {
        let next = out[out.len() - 1].advance();
        out.push(next);
    }
    Ok(out)
}

/// Next-generation scalar coefficients predicted by the explicit
/// coefficient recursions, evaluated from one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarPrediction {
    pub p0: BigRational,
    pub q0: BigRational,
    pub r0: BigRational,
    pub r1: BigRational,
    pub p2: BigRational,
    pub q2: BigRational,
}

/// Evaluates the explicit scalar recursions for the next generation.
///
/// `p0` uses the constant-term expansion `(m+2) q0^(m+1) p0 + (m+1) q0^(m+2)`;
/// the other five are the closed scalar forms for `q0`, `r0`, `r1`, `p2`, `q2`.
pub fn scalar_recursion_step(state: &TreeRecursionState) -> ScalarPrediction {
    let m = state.m;
    let mi = i64::from(m);
    let [p0, p1, p2] = state.pbar.coeffs();
    let [q0, q1, q2] = state.q.coeffs();
    let [r0, r1, _] = state.r.coeffs();
    let qp = |e: u32| pow(q0, e);
    let (a, b, c) = (int(mi), int(mi + 1), int(mi + 2));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let q1sq = q1 * q1;

    let next_p0 = &c * qp(m + 1) * p0 + &b * qp(m + 2);
    let next_q0 = qp(m + 2);
    let next_r0 = int(2) * r0 * qp(m + 1);

    let next_r1 = int(2) * qp(m + 1) * r1
        + int(2) * &b * r0 * qp(m) * q1
        + &b * r0 * r0 * qp(m)
        + &a * r0 * r0 * qp(m - 1) * p0;

    let next_p2 = &c * qp(m + 1) * p2
        + &b * &c * qp(m) * q2 * p0
        + &a * &b * &c * &half * qp(m - 1) * &q1sq * p0
        + &b * &c * qp(m) * q1 * p1
        + &b * &c * qp(m + 1) * q2
        + &b * &b * &c * &half * qp(m) * &q1sq;

    let next_q2 = &c * qp(m + 1) * q2
        + &b * &c * &half * qp(m) * &q1sq
        + &b * r1 * qp(m + 1)
        + &b * &b * r0 * qp(m) * q1
        + &b * qp(m) * p0 * r1
        + &a * &b * r0 * p0 * qp(m - 1) * q1
        + &b * r0 * qp(m) * p1;

    ScalarPrediction {
        p0: next_p0,
        q0: next_q0,
        r0: next_r0,
        r1: next_r1,
        p2: next_p2,
        q2: next_q2,
    }
}

fn pow(base: &BigRational, e: u32) -> BigRational {
    num_traits::pow(base.clone(), e as usize)
}

/// Coefficients normalized by their claimed leading-order growth:
/// `p0 / -(m+2)^g`, `p1 / 2^g (m+2)^2g`, `p2 / -2^2g (m+2)^3g`,
/// `r1 / -2^2g (m+2)^g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeadingOrderRatios {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
}

impl LeadingOrderRatios {
    pub fn of(state: &TreeRecursionState) -> Self {
        let g = state.g;
        let base = BigInt::from(state.m + 2);
        let two = BigInt::from(2);
        let scale = |sign: i64, twos: u32, bases: u32| -> BigRational {
            BigRational::from_integer(BigInt::from(sign) * two.pow(twos) * base.pow(bases))
        };
        let ratio = |c: &BigRational, s: BigRational| (c / s).to_f64().unwrap_or(f64::NAN);
        Self {
            p0: ratio(state.pbar.coeff(0), scale(-1, 0, g)),
            p1: ratio(state.pbar.coeff(1), scale(1, g, 2 * g)),
            p2: ratio(state.pbar.coeff(2), scale(-1, 2 * g, 3 * g)),
            r1: ratio(state.r.coeff(1), scale(-1, 2 * g, g)),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p0, self.p1, self.p2, self.r1]
    }
}

/// Outcome of [`coefficient_recursion_check`].
#[derive(Clone, Debug)]
pub struct CoefficientCheck {
    pub m: u32,
    pub g: u32,
    /// Number of generation steps whose scalar predictions matched exactly.
    pub steps_checked: u32,
    pub ratios: LeadingOrderRatios,
    /// The same ratios at a much later generation, standing in for the limit.
    pub limits: LeadingOrderRatios,
}

impl CoefficientCheck {
    pub fn ratios_positive(&self) -> bool {
        self.ratios.as_array().iter().chain(self.limits.as_array().iter()).all(|&r| r > 0.0)
    }

    /// Largest relative distance of a ratio at `g` from its limit.
    pub fn max_ratio_deviation(&self) -> f64 {
        self.ratios
            .as_array()
            .iter()
            .zip(self.limits.as_array())
            .map(|(r, l)| ((r - l) / l).abs())
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, ratio_tolerance: f64) -> bool {
        self.ratios_positive() && self.max_ratio_deviation() <= ratio_tolerance
    }
}

/// Generations past `g` used to approximate the leading-order limits.
const LIMIT_OFFSET: u32 = 40;

/// Checks the explicit scalar coefficient recursions against the polynomial
/// recursion at every step up to generation `g`, then tabulates the
/// leading-order ratios. A mismatch is reported as an error naming the
/// generation and coefficient.
pub fn coefficient_recursion_check(m: u32, g: u32) -> Result<CoefficientCheck> {
    if g < 2 {
        return Err(Error::InvalidParameter("coefficient check needs g >= 2".into()));
    }
    let mut state = tree_state(m, 1)?;
    let mut steps = 0;
    while state.g < g {
        let predicted = scalar_recursion_step(&state);
        let next = state.advance();
        let actual = [
            ("p0", next.pbar.coeff(0), &predicted.p0),
            ("q0", next.q.coeff(0), &predicted.q0),
            ("r0", next.r.coeff(0), &predicted.r0),
            ("r1", next.r.coeff(1), &predicted.r1),
            ("p2", next.pbar.coeff(2), &predicted.p2),
            ("q2", next.q.coeff(2), &predicted.q2),
        ];
        for (name, got, want) in actual {
            if got != want {
                return Err(Error::Invariant(format!(
                    "m={m}: coefficient {name} at generation {} is {got} by polynomial recursion \
                     but {want} by scalar recursion",
                    next.g
                )));
            }
        }
        state = next;
        steps += 1;
    }
    let ratios = LeadingOrderRatios::of(&state);
    let limits = LeadingOrderRatios::of(&tree_state(m, g + LIMIT_OFFSET)?);
    Ok(CoefficientCheck {
        m,
        g,
        steps_checked: steps,
        ratios,
        limits,
    })
}

/// Analytic `(H_FO, H_SO)` growth exponents in `N`: `1/d_f` and `1 + 2/d_f`
/// with `d_f = log(m+2)/log 2`.
pub fn tree_coherence_exponents(m: u32) -> (f64, f64) {
    let inv_df = 2f64.ln() / f64::from(m + 2).ln();
    (inv_df, 1.0 + 2.0 * inv_df)
}

/// Exact rational rendered as `"num/den"`.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Nearest `f64`; NaN if out of range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{Signed, Zero};

    fn frac(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn generation1_matches_expansions() {
        let s = TreeRecursionState::generation1(2).unwrap();
        assert_eq!(s.pbar(), &TruncPoly::from_ints(-5, 16, -18));
        assert_eq!(s.q(), &TruncPoly::from_ints(1, -7, 12));
        assert_eq!(s.r().coeff(1), &int(-7));
        for m in 1..=6i64 {
            let s = TreeRecursionState::generation1(m as u32).unwrap();
            assert_eq!(s.pbar().coeff(0), &int(-m - 3));
            assert_eq!(s.q().coeff(0), &int(1));
            assert_eq!(s.r().coeff(0), &int(2));
            assert_eq!(s.pbar().coeff(2), &(int(-(m + 1)) - frac((m + 3) * (m + 1) * m, 2)));
            assert_eq!(s.q().coeff(2), &(frac(3 * m * m, 2) + frac(5 * m, 2) + int(1)));
            assert_eq!(s.r().coeff(1), &int(-3 * m - 1));
        }
    }

    #[test]
    fn m1_r_has_no_binomial_factor() {
        let s = TreeRecursionState::generation1(1).unwrap();
        assert_eq!(s.r(), &TruncPoly::from_ints(2, -4, 1));
    }

    #[test]
    fn second_generation_m2() {
        let s = tree_state(2, 2).unwrap();
        assert_eq!(s.pbar(), &TruncPoly::from_ints(-17, 400, -4050));
        assert_eq!(s.num_nodes(), BigInt::from(17));
    }

    #[test]
    fn hand_anchored_sums() {
        assert_eq!(tree_s(2, 1).unwrap(), frac(16, 5));
        assert_eq!(tree_s(1, 1).unwrap(), frac(9, 4));
        assert_eq!(tree_s(2, 2).unwrap(), frac(400, 17));
        assert_eq!(tree_s2(2, 1).unwrap(), frac(76, 25));
        assert_eq!(tree_s2(1, 1).unwrap(), frac(33, 16));
        assert_eq!(tree_s2(2, 2).unwrap(), frac(22300, 289));
    }

    #[test]
    fn constant_terms_follow_closed_recursion() {
        for m in 1..=4u32 {
            let states = tree_states(m, 8).unwrap();
            for w in states.windows(2) {
                let expected = int(i64::from(m) + 2) * w[0].pbar().coeff(0) + int(i64::from(m) + 1);
                assert_eq!(w[1].pbar().coeff(0), &expected);
                assert_eq!(w[1].q().coeff(0), &int(1));
            }
        }
    }

    #[test]
    fn printed_constant_recursion_with_p1_fails() {
        // Substituting p1 for p0 in the constant-term recursion does not
        // reproduce the polynomial route.
        let s = tree_state(2, 1).unwrap();
        let wrong = int(4) * s.pbar().coeff(1) + int(3);
        assert_ne!(s.advance().pbar().coeff(0), &wrong);
    }

    #[test]
    fn sums_increase_and_signs_hold() {
        for m in 1..=3 {
            let states = tree_states(m, 10).unwrap();
            for w in states.windows(2) {
                assert!(w[1].s() > w[0].s());
                assert!(w[1].s2() > w[0].s2());
            }
            for s in &states {
                assert!(s.pbar().coeff(0) < &BigRational::zero());
                assert!(s.s().is_positive());
            }
        }
    }

    #[test]
    fn exact_far_beyond_machine_integers() {
        let s = tree_state(2, 12).unwrap();
        let p2 = s.pbar().coeff(2);
        assert!(p2.is_integer());
        assert!(p2.abs() > BigRational::from_integer(BigInt::from(u64::MAX)));
        // p0 = -(m+2)^g - 1 exactly.
        assert_eq!(s.pbar().coeff(0), &-(BigRational::from_integer(BigInt::from(4).pow(12u32) + 1)));
    }

    #[test]
    fn scalar_r_recursion_first_step() {
        let s = tree_state(2, 1).unwrap();
        assert_eq!(&scalar_recursion_step(&s).r1, s.advance().r().coeff(1));
    }

    #[test]
    fn coefficient_checks_pass() {
        for m in [1, 2] {
            let check = coefficient_recursion_check(m, 6).unwrap();
            assert_eq!(check.steps_checked, 5);
            assert!(check.ratios_positive());
            assert!(check.max_ratio_deviation() < 0.05, "{check:?}");
        }
        assert!(coefficient_recursion_check(2, 1).is_err());
    }

    #[test]
    fn exponents() {
        let (fo, so) = tree_coherence_exponents(2);
        assert!((fo - 0.5).abs() < 1e-15 && (so - 2.0).abs() < 1e-15);
        let (fo, so) = tree_coherence_exponents(1);
        assert!((fo - 0.630_929_753_571_457_4).abs() < 1e-12);
        assert!((so - 2.261_859_507_142_915).abs() < 1e-12);
        let (fo, so) = tree_coherence_exponents(6);
        assert!((fo - 1.0 / 3.0).abs() < 1e-15 && (so - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(init_generation1(0).is_err());
        assert!(tree_s(2, 0).is_err());
    }
}
