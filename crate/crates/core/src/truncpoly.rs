//! Exact rational polynomials reduced modulo `x^3`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `c0 + c1 x + c2 x^2`, with every product truncated past degree 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncPoly {
    coeffs: [BigRational; 3],
}

impl TruncPoly {
    pub fn new(c0: BigRational, c1: BigRational, c2: BigRational) -> Self {
        Self {
            coeffs: [c0, c1, c2],
        }
    }

    pub fn from_ints(c0: i64, c1: i64, c2: i64) -> Self {
        Self::new(int(c0), int(c1), int(c2))
    }

    /// Truncates an ascending coefficient list.
    pub fn from_coeffs(coeffs: &[BigRational]) -> Self {
        let get = |i: usize| coeffs.get(i).cloned().unwrap_or_else(BigRational::zero);
        Self::new(get(0), get(1), get(2))
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(c, BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn zero() -> Self {
        Self::constant(BigRational::zero())
    }

    pub fn coeff(&self, i: usize) -> &BigRational {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[BigRational; 3] {
        &self.coeffs
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let [a, b, c] = &self.coeffs;
        Self::new(a * k, b * k, c * k)
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(&int(k))
    }

    /// Multiplication by `x`, dropping the degree-3 term.
    pub fn shift(&self) -> Self {
        Self::new(
            BigRational::zero(),
            self.coeffs[0].clone(),
            self.coeffs[1].clone(),
        )
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }
}

pub(crate) fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Mul for &TruncPoly {
    type Output = TruncPoly;

    fn mul(self, rhs: &TruncPoly) -> TruncPoly {
        let [a0, a1, a2] = &self.coeffs;
        let [b0, b1, b2] = &rhs.coeffs;
        TruncPoly::new(a0 * b0, a0 * b1 + a1 * b0, a0 * b2 + a1 * b1 + a2 * b0)
    }
}

impl Mul for TruncPoly {
    type Output = TruncPoly;

    fn mul(self, rhs: TruncPoly) -> TruncPoly {
        &self * &rhs
    }
}

impl Add for &TruncPoly {
    type Output = TruncPoly;

    fn add(self, rhs: &TruncPoly) -> TruncPoly {
        let [a0, a1, a2] = &self.coeffs;
        let [b0, b1, b2] = &rhs.coeffs;
        TruncPoly::new(a0 + b0, a1 + b1, a2 + b2)
    }
}

impl Add for TruncPoly {
    type Output = TruncPoly;

    fn add(self, rhs: TruncPoly) -> TruncPoly {
        &self + &rhs
    }
}

impl Sub for &TruncPoly {
    type Output = TruncPoly;

    fn sub(self, rhs: &TruncPoly) -> TruncPoly {
        self + &(-rhs)
    }
}

impl Sub for TruncPoly {
    type Output = TruncPoly;

    fn sub(self, rhs: TruncPoly) -> TruncPoly {
        &self - &rhs
    }
}

impl Neg for &TruncPoly {
    type Output = TruncPoly;

    fn neg(self) -> TruncPoly {
        let [a, b, c] = &self.coeffs;
        TruncPoly::new(-a, -b, -c)
    }
}

impl Neg for TruncPoly {
    type Output = TruncPoly;

    fn neg(self) -> TruncPoly {
        -&self
    }
}

impl fmt::Display for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.coeffs;
        write!(f, "{a} + ({b})x + ({c})x^2 + O(x^3)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_product(a: &[i64], b: &[i64]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += int(x * y);
            }
        }
        out
    }

    #[test]
    fn binomial_power() {
        // (1 - x)^5 = 1 - 5x + 10x^2 - ...
        let p = TruncPoly::from_ints(1, -1, 0).pow(5);
        assert_eq!(p, TruncPoly::from_ints(1, -5, 10));
        assert_eq!(TruncPoly::from_ints(3, 4, 5).pow(0), TruncPoly::one());
    }

    #[test]
    fn shift_drops_top_term() {
        assert_eq!(TruncPoly::from_ints(1, 2, 3).shift(), TruncPoly::from_ints(0, 1, 2));
    }

    proptest! {
        #[test]
        fn truncation_commutes_with_multiplication(
            a in prop::collection::vec(-50i64..50, 1..6),
            b in prop::collection::vec(-50i64..50, 1..6),
        ) {
            let ta = TruncPoly::from_coeffs(&a.iter().map(|&v| int(v)).collect::<Vec<_>>());
            let tb = TruncPoly::from_coeffs(&b.iter().map(|&v| int(v)).collect::<Vec<_>>());
            let expected = TruncPoly::from_coeffs(&full_product(&a, &b));
            prop_assert_eq!(&ta * &tb, expected);
        }

        #[test]
        fn pow_matches_repeated_product(c in prop::array::uniform3(-9i64..9), e in 0u32..7) {
            let p = TruncPoly::from_ints(c[0], c[1], c[2]);
            let mut naive = TruncPoly::one();
            for _ in 0..e {
                naive = &naive * &p;
            }
            prop_assert_eq!(p.pow(e), naive);
        }
    }
}
