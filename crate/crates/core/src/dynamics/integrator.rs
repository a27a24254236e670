use super::DynamicsError;
use crate::trig_hamiltonian::TrigPolyHamiltonian;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    StrangSplit,
    SymplecticEuler,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strang_split" | "strang" => Ok(Scheme::StrangSplit),
            "symplectic_euler" | "euler" => Ok(Scheme::SymplecticEuler),
            _ => Err(format!("unknown scheme {s:?}")),
        }
    }
}

/// Flattened terms for fast evaluation of value and both gradients.
#[derive(Debug, Clone)]
struct Compiled {
    n: usize,
    terms: Vec<(Vec<f64>, Vec<u32>, Complex64)>,
}

impl Compiled {
    fn new(f: &TrigPolyHamiltonian) -> Self {
        let terms = f
            .terms()
            .map(|(m, c)| (m.k.iter().map(|&k| 2.0 * PI * k as f64).collect(), m.alpha.clone(), *c))
            .collect();
        Self { n: f.dim(), terms }
    }

    /// Value, `∂_θ` and `∂_I` at a point.
    fn eval(&self, theta: &[f64], action: &[f64], dth: &mut [f64], dact: &mut [f64]) -> f64 {
        dth.iter_mut().for_each(|x| *x = 0.0);
        dact.iter_mut().for_each(|x| *x = 0.0);
        let mut value = 0.0;
        for (k, alpha, c) in &self.terms {
            let phase: f64 = k.iter().zip(theta).map(|(a, b)| a * b).sum();
            let e = c * Complex64::from_polar(1.0, phase);
            let mono: f64 = alpha.iter().zip(action).map(|(a, x)| x.powi(*a as i32)).product();
            let v = e * mono;
            value += v.re;
            // ∂_θ of c I^α e^{2πik·θ} is 2πik times the term.
            for i in 0..self.n {
                if k[i] != 0.0 {
                    dth[i] -= k[i] * v.im;
                }
                if alpha[i] > 0 {
                    let d: f64 = alpha
                        .iter()
                        .zip(action)
                        .enumerate()
                        .map(|(j, (a, x))| if j == i { *a as f64 * x.powi(*a as i32 - 1) } else { x.powi(*a as i32) })
                        .product();
                    dact[i] += (e * d).re;
                }
            }
        }
        value
    }
}

/// `H = h(I) + f(θ, I)` with `h` the angle-free terms.
#[derive(Debug, Clone)]
pub struct SplitHamiltonian {
    pub full: TrigPolyHamiltonian,
    h: Compiled,
    f: Compiled,
    f_has_actions: bool,
}

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_ITERS: usize = 50;

impl SplitHamiltonian {
    pub fn new(full: &TrigPolyHamiltonian) -> Self {
        let h = full.integrable_part();
        let f = full.angular_part();
        let f_has_actions = f.terms().any(|(m, _)| m.degree() > 0);
        Self { full: full.clone(), h: Compiled::new(&h), f: Compiled::new(&f), f_has_actions }
    }

    pub fn dim(&self) -> usize {
        self.h.n
    }

    pub fn energy(&self, theta: &[f64], action: &[f64]) -> f64 {
        let n = self.dim();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        self.h.eval(theta, action, &mut a, &mut b) + self.f.eval(theta, action, &mut a, &mut b)
    }

    pub fn frequency(&self, action: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let (mut a, mut g) = (vec![0.0; n], vec![0.0; n]);
        self.h.eval(&vec![0.0; n], action, &mut a, &mut g);
        g
    }

    fn drift(&self, theta: &mut [f64], action: &[f64], dt: f64) {
        for (t, w) in theta.iter_mut().zip(self.frequency(action)) {
            *t += w * dt;
        }
    }

    /// Symplectic Euler for `f`, implicit in the actions.
    fn kick_a(&self, theta: &mut [f64], action: &mut [f64], dt: f64) -> Result<(), DynamicsError> {
        let n = self.dim();
        let (mut dth, mut dact) = (vec![0.0; n], vec![0.0; n]);
        let mut new_i = action.to_vec();
        for it in 0.. {
            self.f.eval(theta, &new_i, &mut dth, &mut dact);
            let next: Vec<f64> = action.iter().zip(&dth).map(|(a, d)| a - dt * d).collect();
            let diff = next.iter().zip(&new_i).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            new_i = next;
            if !self.f_has_actions || diff <= FIXED_POINT_TOL * (1.0 + sup(&new_i)) {
                break;
            }
            if it + 1 >= FIXED_POINT_ITERS {
                return Err(DynamicsError::NoConvergence { residual: diff });
            }
        }
        if self.f_has_actions {
            self.f.eval(theta, &new_i, &mut dth, &mut dact);
            theta.iter_mut().zip(&dact).for_each(|(t, d)| *t += dt * d);
        }
        action.copy_from_slice(&new_i);
        Ok(())
    }

    /// The adjoint of [`Self::kick_a`], implicit in the angles.
    fn kick_b(&self, theta: &mut [f64], action: &mut [f64], dt: f64) -> Result<(), DynamicsError> {
        let n = self.dim();
        let (mut dth, mut dact) = (vec![0.0; n], vec![0.0; n]);
        if self.f_has_actions {
            let mut new_t = theta.to_vec();
            for it in 0.. {
                self.f.eval(&new_t, action, &mut dth, &mut dact);
                let next: Vec<f64> = theta.iter().zip(&dact).map(|(a, d)| a + dt * d).collect();
                let diff = next.iter().zip(&new_t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                new_t = next;
                if diff <= FIXED_POINT_TOL * (1.0 + sup(&new_t)) {
                    break;
                }
                if it + 1 >= FIXED_POINT_ITERS {
                    return Err(DynamicsError::NoConvergence { residual: diff });
                }
            }
            theta.copy_from_slice(&new_t);
        }
        self.f.eval(theta, action, &mut dth, &mut dact);
        action.iter_mut().zip(&dth).for_each(|(a, d)| *a -= dt * d);
        Ok(())
    }

    /// One step; negative `dt` runs the Strang scheme backwards exactly.
    pub fn step(&self, theta: &mut [f64], action: &mut [f64], dt: f64, scheme: Scheme) -> Result<(), DynamicsError> {
        match scheme {
            Scheme::StrangSplit => {
                // The kicks are adjoint to each other, so the step is symmetric.
                self.kick_a(theta, action, dt / 2.0)?;
                self.drift(theta, action, dt);
                self.kick_b(theta, action, dt / 2.0)
            }
            Scheme::SymplecticEuler => {
                self.kick_a(theta, action, dt)?;
                self.drift(theta, action, dt);
                Ok(())
            }
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Keep every `stride`-th step in the trace.
    pub stride: usize,
    /// Escape threshold for `|I(t) - I(0)|_∞`.
    pub delta: Option<f64>,
    pub stop_at_escape: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { dt: 1e-2, horizon: 1e6, scheme: Scheme::StrangSplit, stride: 100, delta: Some(0.1), stop_at_escape: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftTrace {
    pub times: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    /// Angles reduced mod 1.
    pub angles: Vec<Vec<f64>>,
    /// Running sup of `|I(t) - I(0)|_∞` at each sample, over all steps so far.
    pub drift: Vec<f64>,
    pub energy_error: Vec<f64>,
    pub max_drift: f64,
    pub max_energy_error: f64,
    /// First time the drift reaches `delta`, interpolated within the step.
    pub escape_time: Option<f64>,
    pub censored: bool,
    pub final_time: f64,
    pub options: IntegratorOptions,
}

impl DriftTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Integrates from `(θ₀, I₀)` up to the horizon, sampling every `stride` steps.
pub fn integrate(
    hamiltonian: &TrigPolyHamiltonian,
    theta0: &[f64],
    action0: &[f64],
    opts: &IntegratorOptions,
) -> Result<DriftTrace, DynamicsError> {
    let n = hamiltonian.dim();
    if theta0.len() != n || action0.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: theta0.len().min(action0.len()) });
    }
    if !(opts.dt > 0.0) || !(opts.horizon >= 0.0) || opts.stride == 0 {
        return Err(DynamicsError::InvalidParameter("need dt > 0, horizon >= 0, stride >= 1".into()));
    }
    let sys = SplitHamiltonian::new(hamiltonian);
    let e0 = sys.energy(theta0, action0);
    let steps = (opts.horizon / opts.dt).round() as u64;
    let mut theta = theta0.to_vec();
    let mut action = action0.to_vec();
    let mut trace = DriftTrace {
        times: Vec::new(),
        actions: Vec::new(),
        angles: Vec::new(),
        drift: Vec::new(),
        energy_error: Vec::new(),
        max_drift: 0.0,
        max_energy_error: 0.0,
        escape_time: None,
        censored: false,
        final_time: 0.0,
        options: opts.clone(),
    };
    let record = |trace: &mut DriftTrace, t: f64, theta: &[f64], action: &[f64], drift: f64| {
        let err = (sys.energy(theta, action) - e0).abs();
        trace.times.push(t);
        trace.actions.push(action.to_vec());
        trace.angles.push(theta.iter().map(|x| x.rem_euclid(1.0)).collect());
        trace.drift.push(drift);
        trace.energy_error.push(err);
        trace.max_energy_error = trace.max_energy_error.max(err);
    };
    record(&mut trace, 0.0, &theta, &action, 0.0);
    let mut drift = 0.0f64;
    let mut prev_dev = 0.0f64;
    for s in 1..=steps {
        let t = s as f64 * opts.dt;
        let (th_prev, ac_prev) = (theta.clone(), action.clone());
        if let Err(e) = sys.step(&mut theta, &mut action, opts.dt, opts.scheme) {
            trace.final_time = t - opts.dt;
            return Err(DynamicsError::Aborted { time: trace.final_time, reason: e.to_string(), partial: Box::new(trace) });
        }
        if theta.iter().chain(&action).any(|x| !x.is_finite()) {
            theta = th_prev;
            action = ac_prev;
            let last = t - opts.dt;
            trace.final_time = last;
            record(&mut trace, last, &theta, &action, drift);
            return Err(DynamicsError::Aborted {
                time: trace.final_time,
                reason: "non-finite state".into(),
                partial: Box::new(trace),
            });
        }
        let dev = sup_diff(&action, action0);
        if let (Some(delta), None) = (opts.delta, trace.escape_time) {
            if dev >= delta && drift < delta {
                let frac = if dev > prev_dev { (delta - prev_dev) / (dev - prev_dev) } else { 1.0 };
                trace.escape_time = Some(t - opts.dt + frac.clamp(0.0, 1.0) * opts.dt);
            }
        }
        drift = drift.max(dev);
        prev_dev = dev;
        let stop = opts.stop_at_escape && trace.escape_time.is_some();
        if s % opts.stride as u64 == 0 || s == steps || stop {
            record(&mut trace, t, &theta, &action, drift);
        }
        trace.final_time = t;
        if stop {
            break;
        }
    }
    trace.max_drift = drift;
    trace.censored = opts.delta.is_some() && trace.escape_time.is_none();
    Ok(trace)
}
