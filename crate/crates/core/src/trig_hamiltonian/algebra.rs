use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("term {index}: {reason}")]
    BadTerm { index: usize, reason: String },
}

/// A monomial `I^alpha e^{2πi k·θ}` carrying a formal perturbation grade.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub k: Vec<i32>,
    pub alpha: Vec<u32>,
    pub grade: u32,
}

impl Mode {
    pub fn k_l1(&self) -> u32 {
        self.k.iter().map(|x| x.unsigned_abs()).sum()
    }

    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn is_angle_free(&self) -> bool {
        self.k.iter().all(|&x| x == 0)
    }

    pub fn k_i64(&self) -> Vec<i64> {
        self.k.iter().map(|&x| x as i64).collect()
    }

    fn conjugate(&self) -> Mode {
        Mode { k: self.k.iter().map(|x| -x).collect(), alpha: self.alpha.clone(), grade: self.grade }
    }
}

/// `Σ c · I^alpha · e^{2πi k·θ}` over finitely many modes.
///
/// Real Hamiltonians keep `c(-k) = conj(c(k))`; every operation here maps
/// real inputs to real outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyHamiltonian {
    n: usize,
    terms: BTreeMap<Mode, Complex64>,
}

impl TrigPolyHamiltonian {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mode, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mode: &Mode) -> Complex64 {
        self.terms.get(mode).copied().unwrap_or_default()
    }

    /// Adds `c` to the coefficient of `mode`, dropping it if the sum is exactly zero.
    pub fn add_term(&mut self, mode: Mode, c: Complex64) {
        debug_assert_eq!(mode.k.len(), self.n);
        debug_assert_eq!(mode.alpha.len(), self.n);
        if c == Complex64::default() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mode) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == Complex64::default() {
                    e.remove();
                }
            }
        }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Mode, Complex64)>) -> Self {
        let mut out = Self::zero(n);
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn action_monomial(n: usize, alpha: &[u32], coef: f64) -> Self {
        let mut out = Self::zero(n);
        out.add_term(Mode { k: vec![0; n], alpha: alpha.to_vec(), grade: 0 }, Complex64::new(coef, 0.0));
        out
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::action_monomial(n, &vec![0; n], c)
    }

    /// `ω·I`.
    pub fn linear(omega: &[f64]) -> Self {
        let n = omega.len();
        let mut out = Self::zero(n);
        for (i, &w) in omega.iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[i] = 1;
            out.add_term(Mode { k: vec![0; n], alpha, grade: 0 }, Complex64::new(w, 0.0));
        }
        out
    }

    /// `½ Σ a_i I_i²`.
    pub fn diagonal_quadratic(a: &[f64]) -> Self {
        let n = a.len();
        let mut out = Self::zero(n);
        for (i, &ai) in a.iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[i] = 2;
            out.add_term(Mode { k: vec![0; n], alpha, grade: 0 }, Complex64::new(0.5 * ai, 0.0));
        }
        out
    }

    /// `amp · I^alpha · cos 2π k·θ`.
    pub fn cos_mode(k: &[i32], alpha: &[u32], amp: f64, grade: u32) -> Self {
        let n = k.len();
        let mode = Mode { k: k.to_vec(), alpha: alpha.to_vec(), grade };
        let mut out = Self::zero(n);
        if mode.is_angle_free() {
            out.add_term(mode, Complex64::new(amp, 0.0));
        } else {
            let conj = mode.conjugate();
            out.add_term(mode, Complex64::new(0.5 * amp, 0.0));
            out.add_term(conj, Complex64::new(0.5 * amp, 0.0));
        }
        out
    }

    /// `amp · I^alpha · sin 2π k·θ`.
    pub fn sin_mode(k: &[i32], alpha: &[u32], amp: f64, grade: u32) -> Self {
        let n = k.len();
        let mode = Mode { k: k.to_vec(), alpha: alpha.to_vec(), grade };
        let mut out = Self::zero(n);
        if !mode.is_angle_free() {
            let conj = mode.conjugate();
            out.add_term(mode, Complex64::new(0.0, -0.5 * amp));
            out.add_term(conj, Complex64::new(0.0, 0.5 * amp));
        }
        out
    }

    fn check_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n != other.n {
            return Err(AlgebraError::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_coeffs(|c| c * a)
    }

    pub fn map_coeffs(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_terms(self.n, self.terms.iter().map(|(m, c)| (m.clone(), f(*c))))
    }

    pub fn filter(&self, keep: impl Fn(&Mode, &Complex64) -> bool) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(m, c)| keep(m, c)).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<Mode, Complex64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mode = Mode {
                    k: ma.k.iter().zip(&mb.k).map(|(a, b)| a + b).collect(),
                    alpha: ma.alpha.iter().zip(&mb.alpha).map(|(a, b)| a + b).collect(),
                    grade: ma.grade + mb.grade,
                };
                *acc.entry(mode).or_default() += ca * cb;
            }
        }
        acc.retain(|_, c| *c != Complex64::default());
        Ok(Self { n: self.n, terms: acc })
    }

    pub fn d_theta(&self, i: usize) -> Self {
        Self::from_terms(
            self.n,
            self.terms.iter().filter(|(m, _)| m.k[i] != 0).map(|(m, c)| {
                (m.clone(), c * Complex64::new(0.0, 2.0 * PI * m.k[i] as f64))
            }),
        )
    }

    pub fn d_action(&self, i: usize) -> Self {
        Self::from_terms(
            self.n,
            self.terms.iter().filter(|(m, _)| m.alpha[i] > 0).map(|(m, c)| {
                let mut mode = m.clone();
                mode.alpha[i] -= 1;
                (mode, c * m.alpha[i] as f64)
            }),
        )
    }

    /// `{f, g} = ∂_θ f·∂_I g - ∂_I f·∂_θ g`.
    pub fn bracket(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<Mode, Complex64> = BTreeMap::new();
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                // Both products share the monomial I^{a+b-e_i} e^{2πi(ka+kb)·θ}.
                for i in 0..self.n {
                    let t1 = ma.k[i] as f64 * mb.alpha[i] as f64;
                    let t2 = ma.alpha[i] as f64 * mb.k[i] as f64;
                    let w = t1 - t2;
                    if w == 0.0 {
                        continue;
                    }
                    let mut a: Vec<u32> = ma.alpha.iter().zip(&mb.alpha).map(|(x, y)| x + y).collect();
                    a[i] -= 1;
                    let mode = Mode {
                        k: ma.k.iter().zip(&mb.k).map(|(x, y)| x + y).collect(),
                        alpha: a,
                        grade: ma.grade + mb.grade,
                    };
                    *acc.entry(mode).or_default() += two_pi_i * w * ca * cb;
                }
            }
        }
        acc.retain(|_, c| *c != Complex64::default());
        Ok(Self { n: self.n, terms: acc })
    }

    pub fn eval(&self, theta: &[f64], action: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let phase: f64 = m.k.iter().zip(theta).map(|(k, t)| *k as f64 * t).sum();
                let mono: f64 = m.alpha.iter().zip(action).map(|(a, x)| x.powi(*a as i32)).product();
                c * mono * Complex64::from_polar(1.0, 2.0 * PI * phase)
            })
            .sum()
    }

    pub fn eval_real(&self, theta: &[f64], action: &[f64]) -> f64 {
        self.eval(theta, action).re
    }

    pub fn is_integrable(&self) -> bool {
        self.terms.keys().all(Mode::is_angle_free)
    }

    pub fn integrable_part(&self) -> Self {
        self.filter(|m, _| m.is_angle_free())
    }

    pub fn angular_part(&self) -> Self {
        self.filter(|m, _| !m.is_angle_free())
    }

    /// `max |c(k,α) - conj c(-k,α)|`; zero for real Hamiltonians.
    pub fn reality_defect(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| (c - self.coefficient(&m.conjugate()).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        self.filter(|_, c| c.norm() > tol)
    }

    pub fn max_grade(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.grade).max()
    }

    pub fn min_grade(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.grade).min()
    }

    /// Distinct Fourier modes present.
    pub fn modes(&self) -> Vec<Vec<i32>> {
        let mut ks: Vec<Vec<i32>> = self.terms.keys().map(|m| m.k.clone()).collect();
        ks.dedup();
        ks.sort();
        ks.dedup();
        ks
    }

    /// Re-expands in `J = I - c`, i.e. returns `J ↦ f(θ, c + J)`.
    pub fn shift_actions(&self, c: &[f64]) -> Self {
        let mut out = Self::zero(self.n);
        for (m, coef) in &self.terms {
            // Π_i (c_i + J_i)^{a_i} = Σ_{β<=α} Π binom(a_i, b_i) c_i^{a_i-b_i} J^β
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
            for i in 0..self.n {
                let a = m.alpha[i];
                let mut next = Vec::with_capacity(partial.len() * (a as usize + 1));
                for (beta, w) in &partial {
                    for b in 0..=a {
                        let factor = binom(a, b) * c[i].powi((a - b) as i32);
                        if factor == 0.0 {
                            continue;
                        }
                        let mut nb = beta.clone();
                        nb.push(b);
                        next.push((nb, w * factor));
                    }
                }
                partial = next;
            }
            for (beta, w) in partial {
                out.add_term(Mode { k: m.k.clone(), alpha: beta, grade: m.grade }, coef * w);
            }
        }
        out
    }

    pub fn to_json(&self) -> HamiltonianJson {
        HamiltonianJson {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermJson { k: m.k.clone(), alpha: m.alpha.clone(), re: c.re, im: c.im, grade: m.grade })
                .collect(),
        }
    }

    /// Builds from JSON, scaling each term by `eps^grade`.
    pub fn from_json_scaled(j: &HamiltonianJson, eps: f64) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(j.n);
        for (index, t) in j.terms.iter().enumerate() {
            if t.k.len() != j.n || t.alpha.len() != j.n {
                return Err(AlgebraError::BadTerm { index, reason: format!("expected length {}", j.n) });
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(AlgebraError::BadTerm { index, reason: "non-finite coefficient".into() });
            }
            let scale = eps.powi(t.grade as i32);
            out.add_term(
                Mode { k: t.k.clone(), alpha: t.alpha.clone(), grade: t.grade },
                Complex64::new(t.re, t.im) * scale,
            );
        }
        Ok(out)
    }

    pub fn from_json(j: &HamiltonianJson) -> Result<Self, AlgebraError> {
        Self::from_json_scaled(j, 1.0)
    }
}

fn binom(a: u32, b: u32) -> f64 {
    (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
}

pub fn poisson_bracket(f: &TrigPolyHamiltonian, g: &TrigPolyHamiltonian) -> Result<TrigPolyHamiltonian, AlgebraError> {
    f.bracket(g)
}

impl Add for &TrigPolyHamiltonian {
    type Output = TrigPolyHamiltonian;
    fn add(self, rhs: Self) -> TrigPolyHamiltonian {
        self.checked_add(rhs).expect("dimension mismatch in addition")
    }
}

impl Sub for &TrigPolyHamiltonian {
    type Output = TrigPolyHamiltonian;
    fn sub(self, rhs: Self) -> TrigPolyHamiltonian {
        self.checked_sub(rhs).expect("dimension mismatch in subtraction")
    }
}

impl Neg for &TrigPolyHamiltonian {
    type Output = TrigPolyHamiltonian;
    fn neg(self) -> TrigPolyHamiltonian {
        self.map_coeffs(|c| -c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub k: Vec<i32>,
    pub alpha: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default)]
    pub grade: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HamiltonianJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}
