use super::algebra::{Mode, TrigPolyHamiltonian};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid domain: {0}")]
    Invalid(String),
}

/// Centre of a nearly-periodic domain: actions near `center` where `∇h ≈ omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub omega: Vec<f64>,
    pub center: Vec<f64>,
    /// Real radius of the frequency window in action space.
    pub radius: f64,
}

/// Complex neighbourhood `|Im θ| < s`, `d(I, B) < r` of a real action set `B`.
///
/// Without an anchor `B` is the ball of radius `big_r` about the origin; with
/// one it is the ball of radius `anchor.radius` about `anchor.center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDomain {
    pub r: f64,
    pub s: f64,
    pub big_r: f64,
    pub anchor: Option<Anchor>,
}

impl AnalyticDomain {
    pub fn new(r: f64, s: f64, big_r: f64) -> Result<Self, DomainError> {
        let d = Self { r, s, big_r, anchor: None };
        d.validate()?;
        Ok(d)
    }

    /// Domain around the window `|I - center| < window·r`.
    pub fn nearly_periodic(
        r: f64,
        s: f64,
        big_r: f64,
        omega: Vec<f64>,
        center: Vec<f64>,
        window: f64,
    ) -> Result<Self, DomainError> {
        if omega.len() != center.len() {
            return Err(DomainError::Invalid("omega and center differ in length".into()));
        }
        if !(window > 0.0) {
            return Err(DomainError::Invalid(format!("window must be positive, got {window}")));
        }
        let d = Self { r, s, big_r, anchor: Some(Anchor { omega, center, radius: window * r }) };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(DomainError::Invalid(format!("r must lie in (0,1), got {}", self.r)));
        }
        if !(self.s >= 0.0 && self.s < 1.0) {
            return Err(DomainError::Invalid(format!("s must lie in [0,1), got {}", self.s)));
        }
        if !(self.big_r > 0.0) {
            return Err(DomainError::Invalid(format!("R must be positive, got {}", self.big_r)));
        }
        Ok(())
    }

    /// Same real set, complex extensions reduced by `(dr, ds)`.
    pub fn shrink(&self, dr: f64, ds: f64) -> Self {
        Self { r: self.r - dr, s: self.s - ds, ..self.clone() }
    }

    /// Radius of the action polydisc on which coefficients are bounded.
    pub fn action_radius(&self) -> f64 {
        match &self.anchor {
            Some(a) => a.radius + self.r,
            None => self.big_r + self.r,
        }
    }

    /// Sup norm of the anchor centre; zero without an anchor.
    pub fn center_offset(&self) -> f64 {
        self.anchor.as_ref().map_or(0.0, |a| a.center.iter().fold(0.0, |m, c| m.max(c.abs())))
    }

    /// Expresses `f` in coordinates centred on the action polydisc.
    pub fn localize(&self, f: &TrigPolyHamiltonian) -> TrigPolyHamiltonian {
        match &self.anchor {
            Some(a) if a.center.iter().any(|&c| c != 0.0) => f.shift_actions(&a.center),
            _ => f.clone(),
        }
    }
}

fn term_weight(m: &Mode, s: f64) -> f64 {
    (2.0 * PI * m.k_l1() as f64 * s).exp()
}

/// `Σ_k e^{2π|k|₁s} Σ_α |c| ρ^{|α|}` for an already localized `f`.
pub fn majorant_local(f: &TrigPolyHamiltonian, rho: f64, s: f64) -> f64 {
    f.terms().map(|(m, c)| c.norm() * term_weight(m, s) * rho.powi(m.degree() as i32)).sum()
}

/// Coefficient majorant of `f` on the domain; dominates the sup norm there.
pub fn majorant_norm(f: &TrigPolyHamiltonian, dom: &AnalyticDomain) -> f64 {
    majorant_local(&dom.localize(f), dom.action_radius(), dom.s)
}

/// Per-component majorants `(|∂_{I_i} f|, |∂_{θ_i} f|)` of a localized `f`.
pub fn derivative_majorants(f: &TrigPolyHamiltonian, rho: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.dim();
    let mut da = vec![0.0; n];
    let mut dt = vec![0.0; n];
    for (m, c) in f.terms() {
        let base = c.norm() * term_weight(m, s);
        let deg = m.degree() as i32;
        for i in 0..n {
            if m.alpha[i] > 0 {
                da[i] += base * m.alpha[i] as f64 * rho.powi(deg - 1);
            }
            if m.k[i] != 0 {
                dt[i] += base * 2.0 * PI * m.k[i].unsigned_abs() as f64 * rho.powi(deg);
            }
        }
    }
    (da, dt)
}

/// `max(|∂_I f|, w·|∂_θ f|)` with component-wise maxima, for a localized `f`.
pub fn weighted_vf_local(f: &TrigPolyHamiltonian, rho: f64, s: f64, weight: f64) -> f64 {
    let (da, dt) = derivative_majorants(f, rho, s);
    let a = da.into_iter().fold(0.0, f64::max);
    let t = dt.into_iter().fold(0.0, f64::max);
    a.max(weight * t)
}

pub fn weighted_vf_norm(f: &TrigPolyHamiltonian, dom: &AnalyticDomain, weight: f64) -> f64 {
    weighted_vf_local(&dom.localize(f), dom.action_radius(), dom.s, weight)
}

/// Weighted vector-field bound of a single localized term.
pub fn term_vf(m: &Mode, c: &Complex64, rho: f64, s: f64, weight: f64) -> f64 {
    let base = c.norm() * term_weight(m, s);
    let deg = m.degree() as i32;
    let mut best = 0.0f64;
    for i in 0..m.k.len() {
        if m.alpha[i] > 0 {
            best = best.max(base * m.alpha[i] as f64 * rho.powi(deg - 1));
        }
        if m.k[i] != 0 {
            best = best.max(weight * base * 2.0 * PI * m.k[i].unsigned_abs() as f64 * rho.powi(deg));
        }
    }
    best
}
