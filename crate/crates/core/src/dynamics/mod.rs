//! Splitting integrators for `H = h(I) + f(θ, I)`, drift and escape-time
//! measurements, and a resonance tracker along computed orbits.

mod integrator;
mod resonance;
mod scaling;

use crate::trig_hamiltonian::TrigPolyHamiltonian;
use thiserror::Error;

pub use integrator::{integrate, DriftTrace, IntegratorOptions, Scheme, SplitHamiltonian};
pub use resonance::{resonance_trace, ResonanceSample, ResonanceTrace, Visit};
pub use scaling::{fast_drift_time, loglog_fit, stability_time, LogLogFit, ScalingRow, ScalingTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("implicit substep did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("integration aborted at t = {time}: {reason}")]
    Aborted { time: f64, reason: String, partial: Box<DriftTrace> },
}

/// `½(I₁² - I₂²) + ε sin 2π(θ₁ + θ₂)`, with fast drift along `I₁ = I₂`.
pub fn counterexample(eps: f64) -> TrigPolyHamiltonian {
    TrigPolyHamiltonian::diagonal_quadratic(&[1.0, -1.0])
        .checked_add(&TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], eps, 1))
        .expect("same dimension")
}

/// `½|I|² + ε sin 2π(θ₁ + θ₂)`.
pub fn convex_example(eps: f64) -> TrigPolyHamiltonian {
    TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0])
        .checked_add(&TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], eps, 1))
        .expect("same dimension")
}

/// Closed-form actions of [`counterexample`] at time `t`.
///
/// `u = I₁ - I₂` is conserved and `φ = θ₁ + θ₂` moves at speed `u`.
pub fn resonant_solution(eps: f64, theta0: &[f64], action0: &[f64], t: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let u = action0[0] - action0[1];
    let phi0 = theta0[0] + theta0[1];
    let shift = if u.abs() < 1e-300 {
        2.0 * PI * eps * (2.0 * PI * phi0).cos() * t
    } else {
        eps / u * ((2.0 * PI * (phi0 + u * t)).sin() - (2.0 * PI * phi0).sin())
    };
    vec![action0[0] - shift, action0[1] - shift]
}
