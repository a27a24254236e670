use super::integrator::DriftTrace;
use super::DynamicsError;
use crate::diophantine::{dirichlet_approx, ApproximationCertificate};
use crate::steepness::ActionFunction;
use crate::trig_hamiltonian::TrigPolyHamiltonian;
use num_traits::ToPrimitive;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSample {
    pub t: f64,
    pub gradient: Vec<f64>,
    /// `None` when the gradient vanishes.
    pub certificate: Option<ApproximationCertificate>,
    /// `|∇h(I) - ω|_∞ < c·r` per window constant `c`.
    pub in_window: Vec<bool>,
}

/// A maximal run of consecutive samples sharing the same resonance direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Visit {
    pub direction: Vec<i64>,
    pub q: i64,
    pub start: f64,
    pub end: f64,
    pub duration: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceTrace {
    pub quality: f64,
    pub r: f64,
    pub window_constants: Vec<f64>,
    pub samples: Vec<ResonanceSample>,
    pub visits: Vec<Visit>,
}

fn key(c: &ApproximationCertificate) -> (Vec<i64>, i64) {
    let dir = c.omega.direction().iter().map(|x| x.to_i64().unwrap_or(i64::MAX)).collect();
    (dir, c.q.to_i64().unwrap_or(i64::MAX))
}

/// Dirichlet certificate of `∇h(I(t))` at every sample and the visit sequence.
pub fn resonance_trace(
    trace: &DriftTrace,
    h: &TrigPolyHamiltonian,
    quality: f64,
    window_constants: &[f64],
    r: f64,
) -> Result<ResonanceTrace, DynamicsError> {
    if trace.is_empty() {
        return Err(DynamicsError::InvalidParameter("empty trace".into()));
    }
    let f = ActionFunction::new(&h.integrable_part()).map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?;
    let mut samples = Vec::with_capacity(trace.len());
    for (t, a) in trace.times.iter().zip(&trace.actions) {
        let gradient = f.gradient(a);
        let certificate = match dirichlet_approx(&gradient, quality) {
            Ok(c) => Some(c),
            Err(crate::diophantine::DiophantineError::ZeroVector) => None,
            Err(e) => return Err(DynamicsError::InvalidParameter(e.to_string())),
        };
        let dist = certificate.as_ref().map(|c| {
            c.omega.to_f64().iter().zip(&gradient).map(|(w, g)| (w - g).abs()).fold(0.0, f64::max)
        });
        let in_window = window_constants.iter().map(|c| dist.is_some_and(|d| d < c * r)).collect();
        samples.push(ResonanceSample { t: *t, gradient, certificate, in_window });
    }
    let mut visits: Vec<Visit> = Vec::new();
    for s in &samples {
        let Some(c) = &s.certificate else { continue };
        let (direction, q) = key(c);
        match visits.last_mut() {
            Some(v) if v.direction == direction && v.q == q => {
                v.end = s.t;
                v.duration = v.end - v.start;
                v.samples += 1;
            }
            _ => visits.push(Visit { direction, q, start: s.t, end: s.t, duration: 0.0, samples: 1 }),
        }
    }
    Ok(ResonanceTrace { quality, r, window_constants: window_constants.to_vec(), samples, visits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{counterexample, integrate, IntegratorOptions};

    #[test]
    fn counterexample_stays_on_one_resonance() {
        // I₁ = I₂ decreases by 2πε t and stays positive up to t = 40.
        let opts = IntegratorOptions { dt: 0.05, horizon: 40.0, stride: 20, ..Default::default() };
        let tr = integrate(&counterexample(1e-3), &[0.0, 0.0], &[0.3, 0.3], &opts).unwrap();
        let rt = resonance_trace(&tr, &counterexample(1e-3), 1e4, &[1.0], 1e-3).unwrap();
        assert_eq!(rt.visits.len(), 1);
        assert_eq!(rt.visits[0].direction, vec![1, -1]);
        assert_eq!(rt.visits[0].q, 1);
        for s in &rt.samples {
            let c = s.certificate.as_ref().unwrap();
            assert!(c.bounds_hold());
            assert!(s.in_window[0]);
        }
    }

    #[test]
    fn frozen_irrational_direction() {
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let opts = IntegratorOptions { dt: 0.1, horizon: 10.0, stride: 10, ..Default::default() };
        let i0 = [1.0, std::f64::consts::SQRT_2];
        let tr = integrate(&h, &[0.0, 0.0], &i0, &opts).unwrap();
        let consts = [0.5, 1.0, 2.0, 4.0];
        let rt = resonance_trace(&tr, &h, 100.0, &consts, 0.01).unwrap();
        let first = rt.samples[0].certificate.as_ref().unwrap();
        for s in &rt.samples {
            let c = s.certificate.as_ref().unwrap();
            assert!(c.bounds_hold());
            assert!(c.error_f64() <= c.error_bound());
            assert_eq!(c.omega, first.omega);
            // Window flags are monotone in the constant.
            assert!(s.in_window.windows(2).all(|w| !w[0] || w[1]));
        }
        assert_eq!(rt.visits.len(), 1);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let opts = IntegratorOptions { dt: 0.1, horizon: 1.0, stride: 1, ..Default::default() };
        let mut tr = integrate(&counterexample(0.0), &[0.0; 2], &[0.1; 2], &opts).unwrap();
        tr.times.clear();
        tr.actions.clear();
        assert!(resonance_trace(&tr, &counterexample(0.0), 10.0, &[1.0], 0.1).is_err());
    }
}
