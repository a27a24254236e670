//! Exact arithmetic for periodic frequency vectors.
//!
//! A frequency `ω` is periodic when `tω ∈ Z^n` for some `t > 0`. Everything in
//! this module is computed with arbitrary-precision rationals so that bounds
//! such as `|k·ω| ≥ 1/T` can be checked without tolerance.

mod dirichlet;
pub mod lattice;
pub(crate) mod resonance;

pub use dirichlet::{dirichlet_approx, dirichlet_approx_exact, dirichlet_approx_with, ApproximationCertificate, DirichletOptions, SearchStrategy};
pub use resonance::{project_onto, resonance_module, ResonanceModule};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("zero vector has no period")]
    ZeroVector,
    #[error("quality Q must exceed 1 (got {0})")]
    QualityTooSmall(f64),
    #[error("brute-force search limited to Q <= {limit} for n > 2 (got {got})")]
    QualityTooLarge { got: f64, limit: f64 },
    #[error("dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),
    #[error("non-finite input component at index {0}")]
    NonFinite(usize),
    #[error("frequency vector {index} is linearly dependent on the preceding ones")]
    Dependent { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("period must be positive")]
    NonPositivePeriod,
}

/// Converts an `f64` to the nearest multiple of `2^-bits`.
pub fn rational_from_f64(x: f64, bits: u32) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let scale = BigInt::one() << bits;
    // x * 2^bits is exact unless it overflows, in which case x is already integral.
    let scaled = x * 2f64.powi(bits as i32);
    if scaled.is_finite() {
        let rounded = scaled.round();
        let num = BigInt::from_f64(rounded)?;
        Some(BigRational::new(num, scale))
    } else {
        BigRational::from_float(x)
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Minimal positive integer `T` with `T·w ∈ Z^n`: the lcm of reduced denominators.
pub fn period_of(w: &[BigRational]) -> Result<BigInt, DiophantineError> {
    if w.iter().all(Zero::is_zero) {
        return Err(DiophantineError::ZeroVector);
    }
    Ok(w.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom())))
}

/// A frequency vector `ω = numerator / period` with a positive integer period.
///
/// The representation is reduced: `gcd(numerator..., period) = 1`, so `period`
/// is the least positive integer with `period·ω ∈ Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicVector {
    numerator: Vec<BigInt>,
    period: BigInt,
}

impl PeriodicVector {
    pub fn new(numerator: Vec<BigInt>, period: BigInt) -> Result<Self, DiophantineError> {
        if !period.is_positive() {
            return Err(DiophantineError::NonPositivePeriod);
        }
        let g = numerator.iter().fold(period.clone(), |g, x| g.gcd(x));
        if numerator.iter().all(Zero::is_zero) {
            return Err(DiophantineError::ZeroVector);
        }
        Ok(Self {
            numerator: numerator.iter().map(|x| x / &g).collect(),
            period: &period / &g,
        })
    }

    pub fn from_integers(v: &[i64]) -> Result<Self, DiophantineError> {
        Self::new(lattice::to_big(v), BigInt::one())
    }

    /// Builds `numerator / period` from small integers.
    pub fn from_ratio(numerator: &[i64], period: i64) -> Result<Self, DiophantineError> {
        Self::new(lattice::to_big(numerator), BigInt::from(period))
    }

    pub fn from_rationals(w: &[BigRational]) -> Result<Self, DiophantineError> {
        let period = period_of(w)?;
        let numerator = w
            .iter()
            .map(|x| (x * BigRational::from_integer(period.clone())).to_integer())
            .collect();
        Self::new(numerator, period)
    }

    pub fn dim(&self) -> usize {
        self.numerator.len()
    }

    pub fn numerator(&self) -> &[BigInt] {
        &self.numerator
    }

    pub fn period(&self) -> &BigInt {
        &self.period
    }

    pub fn value(&self) -> Vec<BigRational> {
        self.numerator
            .iter()
            .map(|x| BigRational::new(x.clone(), self.period.clone()))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let t = self.period.to_f64().unwrap_or(f64::NAN);
        self.numerator.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) / t).collect()
    }

    /// Least real `t > 0` with `tω ∈ Z^n`; equals `period / gcd(numerator)`.
    pub fn real_period(&self) -> BigRational {
        BigRational::new(self.period.clone(), lattice::content(&self.numerator))
    }

    /// The primitive integer vector `real_period · ω`.
    pub fn direction(&self) -> Vec<BigInt> {
        let g = lattice::content(&self.numerator);
        self.numerator.iter().map(|x| x / &g).collect()
    }

    /// `k · numerator`; the divisor `k·ω` equals this over `period`.
    pub fn dot_numerator(&self, k: &[i64]) -> BigInt {
        k.iter().zip(&self.numerator).map(|(a, b)| BigInt::from(*a) * b).sum()
    }

    pub fn is_resonant(&self, k: &[i64]) -> bool {
        self.dot_numerator(k).is_zero()
    }

    pub fn divisor(&self, k: &[i64]) -> BigRational {
        BigRational::new(self.dot_numerator(k), self.period.clone())
    }

    pub fn divisor_f64(&self, k: &[i64]) -> f64 {
        self.dot_numerator(k).to_f64().unwrap_or(f64::NAN) / self.period.to_f64().unwrap_or(f64::NAN)
    }

    pub fn sup_norm(&self) -> BigRational {
        self.value().into_iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
    }
}

/// JSON form with integers as decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PeriodicVectorJson {
    pub numerator: Vec<String>,
    pub period: String,
}

impl From<&PeriodicVector> for PeriodicVectorJson {
    fn from(p: &PeriodicVector) -> Self {
        Self {
            numerator: p.numerator.iter().map(ToString::to_string).collect(),
            period: p.period.to_string(),
        }
    }
}

impl TryFrom<&PeriodicVectorJson> for PeriodicVector {
    type Error = DiophantineError;
    fn try_from(j: &PeriodicVectorJson) -> Result<Self, Self::Error> {
        let parse = |s: &str| s.parse::<BigInt>().map_err(|_| DiophantineError::NonFinite(0));
        let numerator = j.numerator.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
        PeriodicVector::new(numerator, parse(&j.period)?)
    }
}

/// Calls `visit` for every `k ∈ Z^n` with `0 < |k|_1 <= max_l1`.
pub fn for_each_mode(n: usize, max_l1: u32, mut visit: impl FnMut(&[i64])) {
    fn rec(k: &mut Vec<i64>, i: usize, budget: i64, visit: &mut dyn FnMut(&[i64])) {
        if i == k.len() {
            if k.iter().any(|&x| x != 0) {
                visit(k);
            }
            return;
        }
        for v in -budget..=budget {
            k[i] = v;
            rec(k, i + 1, budget - v.abs(), visit);
        }
        k[i] = 0;
    }
    let mut k = vec![0i64; n];
    rec(&mut k, 0, max_l1 as i64, &mut visit);
}

/// Smallest nonzero divisor `|k·ω|` over `0 < |k|_1 <= max_l1`.
///
/// Returns `None` only if every mode in range is resonant.
pub fn smallest_divisor(omega: &PeriodicVector, max_l1: u32) -> Option<BigRational> {
    let mut best: Option<BigInt> = None;
    for_each_mode(omega.dim(), max_l1, |k| {
        let d = omega.dot_numerator(k).abs();
        if !d.is_zero() && best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    });
    best.map(|d| BigRational::new(d, omega.period().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn period_of_examples() {
        assert_eq!(period_of(&[q(3, 4), q(5, 6)]).unwrap(), BigInt::from(12));
        assert_eq!(period_of(&[q(1, 1), q(8, 13)]).unwrap(), BigInt::from(13));
        assert_eq!(period_of(&[q(2, 1), q(4, 1)]).unwrap(), BigInt::from(1));
        assert_eq!(period_of(&[q(0, 1), q(0, 1)]), Err(DiophantineError::ZeroVector));
    }

    #[test]
    fn periodic_vector_reduces() {
        let p = PeriodicVector::from_ratio(&[2, 4], 6).unwrap();
        assert_eq!(p.period(), &BigInt::from(3));
        assert_eq!(p.numerator(), &[BigInt::from(1), BigInt::from(2)]);
        // (2, 4) has integer period 1 but real period 1/2.
        let w = PeriodicVector::from_integers(&[2, 4]).unwrap();
        assert_eq!(w.period(), &BigInt::from(1));
        assert_eq!(w.real_period(), q(1, 2));
    }

    #[test]
    fn smallest_divisor_examples() {
        let w = PeriodicVector::from_ratio(&[5, 2], 5).unwrap();
        assert_eq!(smallest_divisor(&w, 3).unwrap(), q(1, 5));
        let one = PeriodicVector::from_integers(&[1, 1]).unwrap();
        assert_eq!(smallest_divisor(&one, 2).unwrap(), q(1, 1));
    }

    #[test]
    fn smallest_divisor_matches_exhaustive_oracle() {
        // Oracle: direct f64-free enumeration over the box |k_i| <= K.
        let w = PeriodicVector::from_ratio(&[5, 2], 5).unwrap();
        let mut best = q(1000, 1);
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                if a.abs() + b.abs() == 0 || a.abs() + b.abs() > 3 {
                    continue;
                }
                let d = (q(a, 1) + q(2 * b, 5)).abs();
                if !d.is_zero() && d < best {
                    best = d;
                }
            }
        }
        assert_eq!(smallest_divisor(&w, 3).unwrap(), best);
    }

    #[test]
    fn mode_enumeration_counts() {
        let mut count = 0;
        for_each_mode(2, 2, |_| count += 1);
        // |k|_1 = 1: 4 vectors, |k|_1 = 2: 8 vectors.
        assert_eq!(count, 12);
    }

    #[test]
    fn rational_rounding_is_dyadic() {
        let r = rational_from_f64(0.1, 53).unwrap();
        assert!(r.denom() <= &(BigInt::one() << 53));
        assert!((rational_to_f64(&r) - 0.1).abs() < 1e-16);
        assert_eq!(rational_from_f64(0.5, 53).unwrap(), q(1, 2));
        assert!(rational_from_f64(f64::NAN, 53).is_none());
    }
}
