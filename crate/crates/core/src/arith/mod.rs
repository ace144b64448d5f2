//! Exact integer/rational arithmetic, normalized projective points, the
//! places of ℚ and the logarithmic naive height.

mod enumerate;
mod factor;
mod point;

pub use enumerate::{enumerate_bounded, enumerate_product_bounded, max_abs_for_bound, BoundedPoints};
pub use factor::{prime_factors, valuation};
pub(crate) use point::canonicalize_factor;
pub use point::{naive_height, normalize, parse_rational, ProjPoint, Space};

use rug::{Integer, Rational};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("factor {factor} of the point is identically zero")]
    DegeneratePoint { factor: usize },
    #[error("{0} is not a prime")]
    NotPrime(Integer),
    #[error("malformed point literal: {0}")]
    BadLiteral(String),
    #[error("point does not lie in space {expected:?} (got factor sizes {got:?})")]
    SpaceMismatch { expected: Vec<usize>, got: Vec<usize> },
}

/// Natural logarithm of |n|, accurate to double precision for integers of
/// any size. Returns `-inf` for zero.
pub fn log_abs(n: &Integer) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (mantissa, exp) = n.to_f64_exp();
    mantissa.abs().ln() + f64::from(exp) * std::f64::consts::LN_2
}

/// ln |q| for a nonzero rational.
pub fn log_abs_rational(q: &Rational) -> f64 {
    log_abs(q.numer()) - log_abs(q.denom())
}

/// An absolute value of ℚ up to equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    /// The p-adic absolute value, |p|_p = 1/p.
    Finite(Integer),
    Archimedean,
}

impl Place {
    pub fn prime(p: impl Into<Integer>) -> Result<Self, ArithError> {
        let p = p.into();
        if p <= 1 || p.is_probably_prime(40) == rug::integer::IsPrime::No {
            return Err(ArithError::NotPrime(p));
        }
        Ok(Place::Finite(p))
    }

    pub fn is_archimedean(&self) -> bool {
        matches!(self, Place::Archimedean)
    }

    /// ln |c|_v of a nonzero integer.
    pub fn log_abs(&self, c: &Integer) -> f64 {
        match self {
            Place::Archimedean => log_abs(c),
            Place::Finite(p) => -(valuation(c, p) as f64) * log_abs(p),
        }
    }

    /// ln |c|_v of a nonzero rational.
    pub fn log_abs_rational(&self, c: &Rational) -> f64 {
        self.log_abs(c.numer()) - self.log_abs(c.denom())
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(p) => write!(f, "{p}"),
            Place::Archimedean => write!(f, "inf"),
        }
    }
}

/// ln max_i |x_i|_v for a lift that is not identically zero.
///
/// At a finite place this is `-(min_i ord_p x_i) ln p`; at the archimedean
/// place it is the log of the largest absolute coordinate.
pub fn local_log_norm(lift: &[Integer], v: &Place) -> f64 {
    match v {
        Place::Archimedean => lift
            .iter()
            .filter(|x| !x.is_zero())
            .map(log_abs)
            .fold(f64::NEG_INFINITY, f64::max),
        Place::Finite(p) => {
            let min_ord = lift
                .iter()
                .filter(|x| !x.is_zero())
                .map(|x| valuation(x, p))
                .min()
                .unwrap_or(0);
            -(min_ord as f64) * log_abs(p)
        }
    }
}

/// Logarithmic height of a real weight vector applied to the factors of a
/// point: Σ_j r_j h(x_j).
pub fn weighted_height(x: &ProjPoint, weights: &[f64]) -> f64 {
    x.factors()
        .iter()
        .zip(weights)
        .map(|(coords, w)| if *w == 0.0 { 0.0 } else { w * factor_height(coords) })
        .sum()
}

/// Height of a single normalized factor.
pub(crate) fn factor_height(coords: &[Integer]) -> f64 {
    coords
        .iter()
        .filter(|c| !c.is_zero())
        .map(log_abs)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn log_abs_matches_f64_for_small_and_huge() {
        assert!((log_abs(&Integer::from(3)) - 3f64.ln()).abs() < 1e-15);
        let big = Integer::from(10).pow(400);
        assert!((log_abs(&big) - 400.0 * 10f64.ln()).abs() < 1e-12);
        assert!((log_abs(&Integer::from(-7)) - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn local_norm_examples() {
        let two = Place::prime(2).unwrap();
        let l = |v: &[i64]| v.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>();
        assert_eq!(local_log_norm(&l(&[2, 1]), &two), 0.0);
        assert!((local_log_norm(&l(&[4, 6]), &two) + 2f64.ln()).abs() < 1e-15);
        assert!((local_log_norm(&l(&[2, 3]), &Place::Archimedean) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn place_rejects_composites() {
        assert!(Place::prime(9).is_err());
        assert!(Place::prime(1).is_err());
        assert!(Place::prime(101).is_ok());
    }
}
