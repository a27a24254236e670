//! Simultaneous Dirichlet approximation of a real direction by a periodic vector.
//!
//! Write `v = |v|(±1, x)` after moving the largest component to the front and
//! search for the smallest `1 <= q < Q` with `|qx - p|_∞ <= Q^{-1/(n-1)}`. The
//! periodic vector is `ω = |v|(±1, p/q)`, with real period `T = q/|v|`.

use super::{rational_from_f64, rational_to_f64, DiophantineError, PeriodicVector, PeriodicVectorJson};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Continued fractions for `n = 2`, brute force otherwise.
    Auto,
    BruteForce,
    ContinuedFraction,
}

#[derive(Debug, Clone, Copy)]
pub struct DirichletOptions {
    /// Real inputs are rounded to multiples of `2^-precision_bits`.
    pub precision_bits: u32,
    pub strategy: SearchStrategy,
    /// Largest `Q` accepted by the brute-force search.
    pub brute_force_limit: f64,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        Self { precision_bits: 53, strategy: SearchStrategy::Auto, brute_force_limit: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationCertificate {
    pub input: Vec<f64>,
    /// The rational vector actually approximated.
    pub input_exact: Vec<BigRational>,
    pub quality: f64,
    pub quality_exact: BigRational,
    pub q: BigInt,
    pub omega: PeriodicVector,
    /// Real period `q/|v|`.
    pub period: BigRational,
    /// `|v - ω|_∞`, exact.
    pub error: BigRational,
    pub strategy: SearchStrategy,
}

impl ApproximationCertificate {
    pub fn dim(&self) -> usize {
        self.input_exact.len()
    }

    fn sup_input(&self) -> BigRational {
        self.input_exact.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
    }

    /// `T^-1 Q^{-1/(n-1)}` in floating point, for display.
    pub fn error_bound(&self) -> f64 {
        let n = self.dim() as f64;
        self.quality.powf(-1.0 / (n - 1.0)) / rational_to_f64(&self.period)
    }

    /// `(|v|^-1, Q|v|^-1)` in floating point.
    pub fn period_bounds(&self) -> (f64, f64) {
        let m = rational_to_f64(&self.sup_input());
        (1.0 / m, self.quality / m)
    }

    pub fn error_f64(&self) -> f64 {
        rational_to_f64(&self.error)
    }

    pub fn period_f64(&self) -> f64 {
        rational_to_f64(&self.period)
    }

    /// Exact check of `|v-ω| <= T^-1 Q^{-1/(n-1)}` and `|v|^-1 <= T <= Q|v|^-1`.
    pub fn bounds_hold(&self) -> bool {
        let n = self.dim();
        let scaled = &self.error * &self.period;
        let lhs = pow(&scaled, n - 1) * &self.quality_exact;
        let m = self.sup_input();
        let tm = &self.period * &m;
        lhs <= BigRational::one() && tm >= BigRational::one() && tm <= self.quality_exact
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            input: self.input.clone(),
            input_exact: self.input_exact.iter().map(ToString::to_string).collect(),
            quality: self.quality,
            q: self.q.to_string(),
            omega: (&self.omega).into(),
            omega_f64: self.omega.to_f64(),
            period: self.period.to_string(),
            period_f64: self.period_f64(),
            error: self.error.to_string(),
            error_f64: self.error_f64(),
            error_bound: self.error_bound(),
            period_bounds: self.period_bounds(),
            bounds_hold: self.bounds_hold(),
            strategy: self.strategy,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateJson {
    pub input: Vec<f64>,
    pub input_exact: Vec<String>,
    pub quality: f64,
    pub q: String,
    pub omega: PeriodicVectorJson,
    pub omega_f64: Vec<f64>,
    pub period: String,
    pub period_f64: f64,
    pub error: String,
    pub error_f64: f64,
    pub error_bound: f64,
    pub period_bounds: (f64, f64),
    pub bounds_hold: bool,
    pub strategy: SearchStrategy,
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

fn big_pow(x: &BigInt, e: usize) -> BigInt {
    (0..e).fold(BigInt::one(), |acc, _| acc * x)
}

/// Approximates a real vector with default options.
pub fn dirichlet_approx(v: &[f64], quality: f64) -> Result<ApproximationCertificate, DiophantineError> {
    dirichlet_approx_with(v, quality, &DirichletOptions::default())
}

pub fn dirichlet_approx_with(
    v: &[f64],
    quality: f64,
    opts: &DirichletOptions,
) -> Result<ApproximationCertificate, DiophantineError> {
    if v.len() < 2 {
        return Err(DiophantineError::DimensionTooSmall(v.len()));
    }
    let exact = v
        .iter()
        .enumerate()
        .map(|(i, &x)| rational_from_f64(x, opts.precision_bits).ok_or(DiophantineError::NonFinite(i)))
        .collect::<Result<Vec<_>, _>>()?;
    if !(quality > 1.0) || !quality.is_finite() {
        return Err(DiophantineError::QualityTooSmall(quality));
    }
    let q_exact = BigRational::from_float(quality).ok_or(DiophantineError::QualityTooSmall(quality))?;
    let mut cert = dirichlet_approx_exact(&exact, &q_exact, opts)?;
    cert.input = v.to_vec();
    cert.quality = quality;
    Ok(cert)
}

/// Approximates an exact rational vector. `opts.precision_bits` is ignored.
pub fn dirichlet_approx_exact(
    v: &[BigRational],
    quality: &BigRational,
    opts: &DirichletOptions,
) -> Result<ApproximationCertificate, DiophantineError> {
    let n = v.len();
    if n < 2 {
        return Err(DiophantineError::DimensionTooSmall(n));
    }
    if v.iter().all(Zero::is_zero) {
        return Err(DiophantineError::ZeroVector);
    }
    let qf = rational_to_f64(quality);
    if *quality <= BigRational::one() {
        return Err(DiophantineError::QualityTooSmall(qf));
    }
    let strategy = match opts.strategy {
        SearchStrategy::Auto if n == 2 => SearchStrategy::ContinuedFraction,
        SearchStrategy::Auto => SearchStrategy::BruteForce,
        s => s,
    };
    if strategy == SearchStrategy::ContinuedFraction && n != 2 {
        return Err(DiophantineError::DimensionMismatch { expected: 2, got: n });
    }
    if strategy == SearchStrategy::BruteForce && qf > opts.brute_force_limit {
        return Err(DiophantineError::QualityTooLarge { got: qf, limit: opts.brute_force_limit });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[j].abs().cmp(&v[i].abs()).then(i.cmp(&j)));
    let lead = order[0];
    let m = v[lead].abs();
    let sign = if v[lead].is_negative() { -BigInt::one() } else { BigInt::one() };

    // x_j = a_j / d over a common denominator.
    let xs: Vec<BigRational> = order[1..].iter().map(|&i| &v[i] / &m).collect();
    let d = xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let a: Vec<BigInt> = xs.iter().map(|x| x.numer() * (&d / x.denom())).collect();
    let search = Search::new(a, d, quality.clone(), n - 1);

    let found = match strategy {
        SearchStrategy::ContinuedFraction => search.continued_fraction(),
        _ => search.brute_force(),
    };
    // Dirichlet's box principle guarantees a hit for Q > 1.
    let (q, p) = found.ok_or(DiophantineError::QualityTooSmall(qf))?;

    let mut numer = vec![BigInt::zero(); n];
    numer[lead] = &sign * &q;
    for (slot, &i) in order[1..].iter().enumerate() {
        numer[i] = p[slot].clone();
    }
    // ω = (m/q) * numer.
    let scale = &m / BigRational::from_integer(q.clone());
    let value: Vec<BigRational> = numer.iter().map(|x| &scale * BigRational::from_integer(x.clone())).collect();
    let omega = PeriodicVector::from_rationals(&value)?;
    let error = v
        .iter()
        .zip(&value)
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(BigRational::zero);
    let period = omega.real_period();

    Ok(ApproximationCertificate {
        input: v.iter().map(rational_to_f64).collect(),
        input_exact: v.to_vec(),
        quality: qf,
        quality_exact: quality.clone(),
        q,
        omega,
        period,
        error,
        strategy,
    })
}

struct Search {
    a: Vec<BigInt>,
    d: BigInt,
    qn: BigInt,
    /// `d^{n-1} * denom(Q)`.
    rhs: BigInt,
    exp: usize,
    limit: BigRational,
}

impl Search {
    fn new(a: Vec<BigInt>, d: BigInt, quality: BigRational, exp: usize) -> Self {
        let rhs = big_pow(&d, exp) * quality.denom();
        Self { a, d, qn: quality.numer().clone(), rhs, exp, limit: quality }
    }

    /// `(num/d)^{exp} * Q <= 1`.
    fn within(&self, num: &BigInt) -> bool {
        big_pow(num, self.exp) * &self.qn <= self.rhs
    }

    /// Lexicographically smallest admissible `p` for this `q`, if any.
    fn fit(&self, q: &BigInt) -> Option<Vec<BigInt>> {
        self.a
            .iter()
            .map(|aj| {
                let (fl, r) = (q * aj).div_mod_floor(&self.d);
                if self.within(&r) {
                    Some(fl)
                } else if self.within(&(&self.d - &r)) {
                    Some(fl + 1)
                } else {
                    None
                }
            })
            .collect()
    }

    fn below_limit(&self, q: &BigInt) -> bool {
        BigRational::from_integer(q.clone()) < self.limit
    }

    fn brute_force(&self) -> Option<(BigInt, Vec<BigInt>)> {
        let mut q = BigInt::one();
        while self.below_limit(&q) {
            if let Some(p) = self.fit(&q) {
                return Some((q, p));
            }
            q += 1;
        }
        None
    }

    /// The first admissible `q` is a best approximation of the second kind,
    /// hence a convergent denominator of `x = a/d`.
    fn continued_fraction(&self) -> Option<(BigInt, Vec<BigInt>)> {
        debug_assert_eq!(self.a.len(), 1);
        let (mut num, mut den) = (self.a[0].clone(), self.d.clone());
        let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::one());
        loop {
            if !self.below_limit(&q_cur) {
                return None;
            }
            if let Some(p) = self.fit(&q_cur) {
                return Some((q_cur, p));
            }
            let r = num.mod_floor(&den);
            if r.is_zero() {
                return None;
            }
            num = std::mem::replace(&mut den, r);
            let q_next = num.div_floor(&den) * &q_cur + &q_prev;
            q_prev = std::mem::replace(&mut q_cur, q_next);
        }
    }
}
