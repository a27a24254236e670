use super::frames::{all_frames, SubspaceFrame};
use super::SteepnessError;
use crate::trig_hamiltonian::{majorant_local, TrigPolyHamiltonian};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdmOptions {
    pub gamma: f64,
    pub tau: f64,
    pub l_max: u32,
    /// Grid steps per axis; the grid has `grid_res + 1` points per axis so that 0 is a node.
    pub grid_res: usize,
    pub random_points: usize,
    /// Radius of the ball `B` centred at the origin.
    pub radius: f64,
    pub seed: u64,
}

impl Default for SdmOptions {
    fn default() -> Self {
        Self { gamma: 0.5, tau: 11.0, l_max: 3, grid_res: 32, random_points: 10_000, radius: 1.0, seed: 0 }
    }
}

impl SdmOptions {
    fn validate(&self) -> Result<(), SteepnessError> {
        if self.grid_res < 8 {
            return Err(SteepnessError::InvalidParameter(format!("grid_res must be >= 8, got {}", self.grid_res)));
        }
        if !(self.radius > 0.0) || !(self.tau >= 0.0) || !(self.gamma >= 0.0) || self.l_max == 0 {
            return Err(SteepnessError::InvalidParameter("need radius > 0, tau >= 0, gamma >= 0, L_max >= 1".into()));
        }
        Ok(())
    }
}

/// An integrable `h` with its gradient and Hessian as polynomials.
#[derive(Debug, Clone)]
pub struct ActionFunction {
    pub h: TrigPolyHamiltonian,
    grad: Vec<TrigPolyHamiltonian>,
    hess: Vec<Vec<TrigPolyHamiltonian>>,
}

impl ActionFunction {
    pub fn new(h: &TrigPolyHamiltonian) -> Result<Self, SteepnessError> {
        if !h.is_integrable() {
            return Err(SteepnessError::NotIntegrable);
        }
        let n = h.dim();
        let grad: Vec<_> = (0..n).map(|i| h.d_action(i)).collect();
        let hess = grad.iter().map(|g| (0..n).map(|j| g.d_action(j)).collect()).collect();
        Ok(Self { h: h.clone(), grad, hess })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.h.eval_real(&vec![0.0; x.len()], x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let th = vec![0.0; x.len()];
        self.grad.iter().map(|g| g.eval_real(&th, x)).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let th = vec![0.0; n];
        DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval_real(&th, x))
    }

    /// Majorant of `|h|_{C^3}` on the ball of the given radius.
    pub fn c3_bound(&self, radius: f64) -> f64 {
        let n = self.dim();
        let mut level = vec![self.h.clone()];
        let mut best = majorant_local(&self.h, radius, 0.0);
        for _ in 0..3 {
            level = level.iter().flat_map(|f| (0..n).map(move |i| f.d_action(i))).collect();
            for f in &level {
                best = best.max(majorant_local(f, radius, 0.0));
            }
        }
        best
    }

    /// `‖Π_Λ ∇h(x)‖`.
    pub fn projected_gradient(&self, frame: &SubspaceFrame, x: &[f64]) -> f64 {
        norm(&frame.project_alpha(&self.gradient(x)))
    }

    /// Smallest singular value of `∂_αα h_Λ` at `x`.
    pub fn restricted_sigma_min(&self, frame: &SubspaceFrame, x: &[f64]) -> f64 {
        sigma_min_restricted(&self.hessian(x), frame)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn sigma_min_restricted(hess: &DMatrix<f64>, frame: &SubspaceFrame) -> f64 {
    let n = frame.n;
    let k = frame.k;
    let e = DMatrix::from_fn(n, k, |i, j| frame.basis_e[j][i]);
    let m = e.transpose() * hess * &e;
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()))
}

/// Per-subspace outcome of an SDM check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceRecord {
    pub label: String,
    pub k: usize,
    pub level: u32,
    pub complement_generators: Vec<Vec<i64>>,
    /// Sample point (in actions) minimizing `max(‖∂_α h_Λ‖, σ_min)`.
    pub worst_point: Vec<f64>,
    pub gradient_norm: f64,
    pub sigma_min: f64,
    /// `L^τ · min max(‖∂_α h_Λ‖, σ_min)`: the check passes for `γ` strictly below it.
    pub critical_gamma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdmStatus {
    Refuted,
    NoViolationFound,
}

impl fmt::Display for SdmStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdmStatus::Refuted => write!(f, "refuted"),
            SdmStatus::NoViolationFound => write!(f, "no violation found at resolution"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdmReport {
    pub options: SdmOptions,
    pub c3_bound: f64,
    pub points_per_frame: usize,
    pub records: Vec<SubspaceRecord>,
    pub passed: bool,
    /// Supremum of the passing `γ` over the sampled points, exact for the sample set.
    pub critical_gamma: f64,
    pub status: SdmStatus,
}

impl SdmReport {
    pub fn first_violation(&self) -> Option<&SubspaceRecord> {
        self.records.iter().find(|r| !r.passed)
    }
}

/// Cached per-frame samples: `∂_α h_Λ` (flattened, `k` per point) and `σ_min`.
#[derive(Debug, Clone)]
pub(crate) struct FrameSamples {
    pub frame: SubspaceFrame,
    pub points: Vec<Vec<f64>>,
    pub grad_alpha: Vec<f64>,
    pub sigma: Vec<f64>,
    pub min_sigma: f64,
}

impl FrameSamples {
    /// Index, gradient norm, σ and `max(‖g - shift‖, σ)` of the worst sample.
    pub fn worst(&self, shift: &[f64]) -> (usize, f64, f64, f64) {
        let k = self.frame.k;
        let mut best = (0, f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for (i, s) in self.sigma.iter().enumerate() {
            if *s >= best.3 {
                continue;
            }
            let g = &self.grad_alpha[i * k..(i + 1) * k];
            let gn = g.iter().zip(shift).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let m = gn.max(*s);
            if m < best.3 {
                best = (i, gn, *s, m);
            }
        }
        best
    }
}

fn grid_points(n: usize, res: usize, radius: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..=res).map(|j| radius * (2.0 * j as f64 / res as f64 - 1.0)).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> = idx.iter().map(|&j| axis[j]).collect();
        if norm(&p) <= radius * (1.0 + 1e-12) {
            out.push(p);
        }
        let mut d = 0;
        loop {
            if d == n {
                return out;
            }
            idx[d] += 1;
            if idx[d] <= res {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Uniform points in the ball by rejection from the cube.
pub(crate) fn ball_points(n: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if norm(&p) <= 1.0 {
            out.push(p.into_iter().map(|x| x * radius).collect());
        }
    }
    out
}

pub(crate) fn sample_frames(h: &ActionFunction, opts: &SdmOptions) -> Vec<FrameSamples> {
    let n = h.dim();
    let grid = grid_points(n, opts.grid_res, opts.radius);
    let random = ball_points(n, opts.random_points, opts.radius, opts.seed);
    all_frames(n, opts.l_max)
        .into_par_iter()
        .map(|frame| {
            let mut points: Vec<Vec<f64>> =
                grid.iter().map(|p| frame.to_actions(&p[..frame.k], &p[frame.k..])).collect();
            points.extend(random.iter().cloned());
            let mut grad_alpha = Vec::with_capacity(points.len() * frame.k);
            let mut sigma = Vec::with_capacity(points.len());
            for p in &points {
                grad_alpha.extend(frame.project_alpha(&h.gradient(p)));
                sigma.push(h.restricted_sigma_min(&frame, p));
            }
            let min_sigma = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
            FrameSamples { frame, points, grad_alpha, sigma, min_sigma }
        })
        .collect()
}

pub(crate) fn record_for(fs: &FrameSamples, shift: &[f64], opts: &SdmOptions) -> SubspaceRecord {
    let (i, gn, s, m) = fs.worst(shift);
    let critical_gamma = (fs.frame.level as f64).powf(opts.tau) * m;
    SubspaceRecord {
        label: fs.frame.label(),
        k: fs.frame.k,
        level: fs.frame.level,
        complement_generators: fs.frame.complement_generators.clone(),
        worst_point: fs.points[i].clone(),
        gradient_norm: gn,
        sigma_min: s,
        critical_gamma,
        passed: opts.gamma < critical_gamma,
    }
}

/// Checks the SDM alternative at every sample point of `B` for every frame
/// with level at most `L_max`.
pub fn sdm_check(h: &TrigPolyHamiltonian, opts: &SdmOptions) -> Result<SdmReport, SteepnessError> {
    opts.validate()?;
    let f = ActionFunction::new(h)?;
    let samples = sample_frames(&f, opts);
    let records: Vec<SubspaceRecord> =
        samples.iter().map(|fs| record_for(fs, &vec![0.0; fs.frame.k], opts)).collect();
    let critical_gamma = records.iter().map(|r| r.critical_gamma).fold(f64::INFINITY, f64::min);
    let passed = records.iter().all(|r| r.passed);
    Ok(SdmReport {
        options: opts.clone(),
        c3_bound: f.c3_bound(opts.radius),
        points_per_frame: samples.first().map_or(0, |s| s.points.len()),
        records,
        passed,
        critical_gamma,
        status: if passed { SdmStatus::NoViolationFound } else { SdmStatus::Refuted },
    })
}

/// `min` over frames with level at most `L_max` of `σ_min(∂_αα h_Λ)` at `x`.
pub fn hessian_margin(h: &TrigPolyHamiltonian, l_max: u32, x: &[f64]) -> Result<(f64, SubspaceFrame), SteepnessError> {
    let f = ActionFunction::new(h)?;
    let hess = f.hessian(x);
    all_frames(h.dim(), l_max)
        .into_iter()
        .map(|fr| (sigma_min_restricted(&hess, &fr), fr))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| SteepnessError::InvalidParameter("no frames".into()))
}
