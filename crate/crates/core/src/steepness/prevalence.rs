use super::sdm::{sample_frames, ActionFunction, FrameSamples, SdmOptions};
use super::SteepnessError;
use crate::trig_hamiltonian::TrigPolyHamiltonian;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceRow {
    pub gamma: f64,
    pub bad: usize,
    pub fraction: f64,
    /// Binomial standard error of `fraction`.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceTable {
    pub tau: f64,
    pub l_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub grid_res: usize,
    pub rows: Vec<PrevalenceRow>,
}

impl PrevalenceTable {
    /// Smallest `C` with `fraction ≤ C γ^{1/2}` on every row.
    pub fn fitted_constant(&self) -> f64 {
        self.rows.iter().filter(|r| r.gamma > 0.0).map(|r| r.fraction / r.gamma.sqrt()).fold(0.0, f64::max)
    }

    /// Bad fraction never increases as `γ` decreases.
    pub fn is_monotone(&self) -> bool {
        let mut rows: Vec<&PrevalenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        rows.windows(2).all(|w| w[0].fraction <= w[1].fraction)
    }

    /// Each row of `other` (same `γ` list) within `z` combined standard errors.
    pub fn consistent_with(&self, other: &Self, z: f64) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| {
            let p = (a.bad + b.bad) as f64 / (self.samples + other.samples) as f64;
            let se = (p * (1.0 - p) * (1.0 / self.samples as f64 + 1.0 / other.samples as f64)).sqrt();
            a.gamma == b.gamma && (a.fraction - b.fraction).abs() <= z * se + 1e-15
        })
    }
}

/// The shift `ξ` of sample `index`, uniform in `[-1, 1]^n`, from its own stream.
pub fn sample_shift(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Sup of the passing `γ` for `h - ξ·I` over the cached samples.
pub(crate) fn critical_gamma(frames: &[FrameSamples], xi: &[f64], tau: f64) -> f64 {
    let mut best = f64::INFINITY;
    for fs in frames {
        let scale = (fs.frame.level as f64).powf(tau);
        if scale * fs.min_sigma >= best {
            continue;
        }
        let shift = fs.frame.project_alpha(xi);
        let (_, _, _, m) = fs.worst(&shift);
        best = best.min(scale * m);
    }
    best
}

/// Fraction of shifts `ξ` for which `h_ξ(I) = h(I) - ξ·I` fails the SDM check, per `γ`.
pub fn prevalence_mc(
    h: &TrigPolyHamiltonian,
    gammas: &[f64],
    samples: usize,
    seed: u64,
    opts: &SdmOptions,
) -> Result<PrevalenceTable, SteepnessError> {
    let n = h.dim();
    let tau_min = 2.0 * ((n * n) as f64 + 1.0);
    if !(opts.tau > tau_min) {
        return Err(SteepnessError::InvalidParameter(format!("tau must exceed 2(n^2+1) = {tau_min}, got {}", opts.tau)));
    }
    if samples < 1000 {
        return Err(SteepnessError::InvalidParameter(format!("need at least 1000 samples, got {samples}")));
    }
    let f = ActionFunction::new(h)?;
    let frames = sample_frames(&f, opts);
    let critical: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| critical_gamma(&frames, &sample_shift(n, seed, i), opts.tau))
        .collect();
    let rows = gammas
        .iter()
        .map(|&gamma| {
            let bad = critical.iter().filter(|&&c| gamma >= c).count();
            let p = bad as f64 / samples as f64;
            PrevalenceRow { gamma, bad, fraction: p, sigma: (p * (1.0 - p) / samples as f64).sqrt() }
        })
        .collect();
    Ok(PrevalenceTable { tau: opts.tau, l_max: opts.l_max, samples, seed, grid_res: opts.grid_res, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saddle() -> TrigPolyHamiltonian {
        TrigPolyHamiltonian::action_monomial(2, &[2, 0], 1.0)
            .checked_add(&TrigPolyHamiltonian::action_monomial(2, &[0, 2], -1.0))
            .unwrap()
    }

    fn opts() -> SdmOptions {
        SdmOptions { random_points: 2000, ..Default::default() }
    }

    const GAMMAS: [f64; 6] = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];

    #[test]
    fn convex_never_bad() {
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let t = prevalence_mc(&h, &[0.1, 0.5, 0.99], 1000, 3, &opts()).unwrap();
        assert!(t.rows.iter().all(|r| r.bad == 0));
    }

    #[test]
    fn saddle_scaling() {
        let t = prevalence_mc(&saddle(), &GAMMAS, 2000, 1, &opts()).unwrap();
        assert!(t.is_monotone());
        for w in t.rows.windows(2) {
            // Halving γ: ratio at most 1/√2 up to three binomial standard errors.
            let (hi, lo) = (&w[0], &w[1]);
            if hi.bad > 0 {
                assert!(lo.fraction <= hi.fraction / 2f64.sqrt() + 3.0 * (hi.sigma + lo.sigma), "{hi:?} {lo:?}");
            }
        }
        let c = t.fitted_constant();
        assert!(t.rows.iter().all(|r| r.fraction <= c * r.gamma.sqrt() + 1e-15));
    }

    #[test]
    fn deterministic_and_resolution_stable() {
        let a = prevalence_mc(&saddle(), &GAMMAS, 1000, 9, &opts()).unwrap();
        let b = prevalence_mc(&saddle(), &GAMMAS, 1000, 9, &opts()).unwrap();
        assert_eq!(a, b);
        let fine = prevalence_mc(&saddle(), &GAMMAS, 1000, 9, &SdmOptions { grid_res: 64, ..opts() }).unwrap();
        assert!(a.consistent_with(&fine, 3.0), "{a:?}\n{fine:?}");
    }

    #[test]
    fn parameter_checks() {
        assert!(prevalence_mc(&saddle(), &GAMMAS, 1000, 0, &SdmOptions { tau: 10.0, ..opts() }).is_err());
        assert!(prevalence_mc(&saddle(), &GAMMAS, 999, 0, &opts()).is_err());
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a = sample_shift(3, 5, 17);
        let b = sample_shift(3, 5, 17);
        assert_eq!(a, b);
        assert_ne!(a, sample_shift(3, 5, 18));
        assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
