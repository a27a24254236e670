//! Closed-form stability exponents and a ledger of the smallness conditions
//! behind them.
//!
//! The ledger is bookkeeping for the proof's parameter choices, not a certified
//! stability bound. Thresholds are handled in `log10` because they underflow
//! `f64` for realistic parameters.

mod ledger;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

pub use ledger::{condition_ledger, tilde_a_conditions, ConditionLedger, ConditionRow, LedgerParams, RowKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("need n >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("need tau >= 2, got {0}")]
    TauTooSmall(String),
    #[error("tau is not a finite number")]
    NonFinite,
}

/// Exponents `a_j`, `a`, `b` as exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPlan {
    pub n: usize,
    pub tau: BigRational,
    /// `a_j = (2τ(n+1))^{-n-1+j}`, `j = 1..=n`.
    pub a_seq: Vec<BigRational>,
    pub a: BigRational,
    pub b: BigRational,
    /// `3^{-1} (2n)^{-3n}`, kept for comparison only.
    pub simplified: BigRational,
}

fn rpow(x: &BigRational, e: i32) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn exponent_plan(n: usize, tau: &BigRational) -> Result<ExponentPlan, ExponentError> {
    if n < 2 {
        return Err(ExponentError::DimensionTooSmall(n));
    }
    if *tau < int(2) {
        return Err(ExponentError::TauTooSmall(tau.to_string()));
    }
    let base = int(2) * tau * int(n as i64 + 1);
    let a_seq: Vec<BigRational> = (1..=n).map(|j| rpow(&base, j as i32 - n as i32 - 1)).collect();
    let b = &a_seq[0] / int(3);
    let simplified = rpow(&int(2 * n as i64), -3 * n as i32) / int(3);
    Ok(ExponentPlan { n, tau: tau.clone(), a_seq, a: b.clone(), b, simplified })
}

/// `τ` given as a float, converted exactly.
pub fn exponent_plan_f64(n: usize, tau: f64) -> Result<ExponentPlan, ExponentError> {
    let t = BigRational::from_float(tau).ok_or(ExponentError::NonFinite)?;
    exponent_plan(n, &t)
}

pub(crate) fn f(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl ExponentPlan {
    pub fn a_f64(&self) -> f64 {
        f(&self.a)
    }

    pub fn b_f64(&self) -> f64 {
        f(&self.b)
    }

    pub fn a_j(&self, j: usize) -> &BigRational {
        &self.a_seq[j - 1]
    }

    /// `r_j = c T_j^{-1} ε^{a_j}`.
    pub fn r_j(&self, j: usize, eps: f64, period: f64, c: f64) -> f64 {
        c * eps.powf(f(self.a_j(j))) / period
    }

    /// `m = ⌈c ε^{-a}⌉`.
    pub fn steps(&self, eps: f64, c: f64) -> f64 {
        (c * eps.powf(-self.a_f64())).ceil()
    }

    /// `r₀ = ε^b`.
    pub fn r0(&self, eps: f64) -> f64 {
        eps.powf(self.b_f64())
    }

    pub fn is_increasing(&self) -> bool {
        self.a_seq.windows(2).all(|w| w[0] < w[1]) && self.a_seq.iter().all(|x| x > &self.a && x.is_positive())
    }

    pub fn to_json(&self) -> PlanJson {
        let pair = |x: &BigRational| RationalJson { exact: x.to_string(), value: f(x) };
        PlanJson {
            n: self.n,
            tau: pair(&self.tau),
            a_seq: self.a_seq.iter().map(pair).collect(),
            a: pair(&self.a),
            b: pair(&self.b),
            simplified: pair(&self.simplified),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalJson {
    pub exact: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanJson {
    pub n: usize,
    pub tau: RationalJson,
    pub a_seq: Vec<RationalJson>,
    pub a: RationalJson,
    pub b: RationalJson,
    pub simplified: RationalJson,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_plan() {
        let p = exponent_plan(2, &int(2)).unwrap();
        assert_eq!(p.a_seq, vec![rational(1, 144), rational(1, 12)]);
        assert_eq!(p.a, rational(1, 432));
        assert_eq!(p.b, rational(1, 432));
        assert_eq!(p.simplified, rational(1, 12288));
        assert!(p.is_increasing());
    }

    #[test]
    fn errors() {
        assert_eq!(exponent_plan(1, &int(2)).unwrap_err(), ExponentError::DimensionTooSmall(1));
        assert!(matches!(exponent_plan(3, &rational(3, 2)), Err(ExponentError::TauTooSmall(_))));
        assert_eq!(exponent_plan_f64(2, f64::NAN).unwrap_err(), ExponentError::NonFinite);
    }

    #[test]
    fn derived_quantities() {
        let p = exponent_plan(2, &int(2)).unwrap();
        let eps = 1e-6f64;
        assert!((p.r0(eps) - eps.powf(1.0 / 432.0)).abs() < 1e-15);
        assert_eq!(p.steps(eps, 1.0), (eps.powf(-1.0 / 432.0)).ceil());
        assert!((p.r_j(2, eps, 4.0, 1.0) - eps.powf(1.0 / 12.0) / 4.0).abs() < 1e-15);
        let j = p.to_json();
        assert_eq!(j.a.exact, "1/432");
        assert_eq!(j.simplified.exact, "1/12288");
    }

    #[test]
    fn plans_increase_for_many_sizes() {
        for n in 2..=6 {
            for tau in [2, 5, 11] {
                assert!(exponent_plan(n, &int(tau)).unwrap().is_increasing());
            }
        }
    }
}
