use super::frames::SubspaceFrame;
use super::sdm::{norm, ActionFunction};
use super::SteepnessError;
use crate::trig_hamiltonian::TrigPolyHamiltonian;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveWitness {
    /// Samples `Γ(t_i)` at `t_i = i/(len-1)`.
    pub curve: Vec<Vec<f64>>,
    pub r: f64,
    pub index: usize,
    pub t_star: f64,
    pub projected_gradient: f64,
}

/// No sample met both conditions before the curve left the `r`-ball or ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub r: f64,
    pub threshold: f64,
    pub max_projected_gradient: f64,
    pub samples_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found(CurveWitness),
    Counterexample(Counterexample),
}

const CURVE_TOL: f64 = 1e-12;

/// Searches the sampled curve for the first `t*` with `|Γ(t) - Γ(0)| ≤ r` on
/// `[0, t*]` and `‖Π_Λ ∇h(Γ(t*))‖ > r²/2`.
pub fn steep_witness(
    h: &TrigPolyHamiltonian,
    frame: &SubspaceFrame,
    gamma: f64,
    tau: f64,
    curve: &[Vec<f64>],
    r: f64,
    radius: f64,
) -> Result<WitnessOutcome, SteepnessError> {
    let f = ActionFunction::new(h)?;
    let m = f.c3_bound(radius);
    let bound = gamma * (frame.level as f64).powf(-tau) / (2.0 * m);
    if !(r > 0.0 && r < bound && r < 1.0) {
        return Err(SteepnessError::Domain(format!("need 0 < r < (2M)^-1 γ L^-τ = {bound:e} (M = {m}), got r = {r}")));
    }
    if curve.len() < 2 {
        return Err(SteepnessError::Domain("curve needs at least two samples".into()));
    }
    let start = &curve[0];
    let dist = |p: &[f64]| norm(&p.iter().zip(start).map(|(a, b)| a - b).collect::<Vec<_>>());
    if (dist(curve.last().unwrap()) - r).abs() > CURVE_TOL * r.max(1.0) {
        return Err(SteepnessError::Domain(format!("endpoint separation {} differs from r = {r}", dist(curve.last().unwrap()))));
    }
    for p in curve {
        let d: Vec<f64> = p.iter().zip(start).map(|(a, b)| a - b).collect();
        if norm(&frame.project_beta(&d)) > CURVE_TOL || norm(p) > radius * (1.0 + CURVE_TOL) {
            return Err(SteepnessError::Domain("curve leaves the affine subspace or the ball".into()));
        }
    }
    let threshold = r * r / 2.0;
    let last = curve.len() - 1;
    let mut max_pg = 0.0f64;
    for (i, p) in curve.iter().enumerate() {
        if dist(p) > r * (1.0 + CURVE_TOL) {
            return Ok(WitnessOutcome::Counterexample(Counterexample {
                r,
                threshold,
                max_projected_gradient: max_pg,
                samples_checked: i,
            }));
        }
        let pg = f.projected_gradient(frame, p);
        max_pg = max_pg.max(pg);
        if pg > threshold {
            return Ok(WitnessOutcome::Found(CurveWitness {
                curve: curve.to_vec(),
                r,
                index: i,
                t_star: i as f64 / last as f64,
                projected_gradient: pg,
            }));
        }
    }
    Ok(WitnessOutcome::Counterexample(Counterexample { r, threshold, max_projected_gradient: max_pg, samples_checked: curve.len() }))
}

/// `Γ(t) = a + t (b - a)` sampled at `samples + 1` points.
pub fn segment(a: &[f64], b: &[f64], samples: usize) -> Vec<Vec<f64>> {
    (0..=samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        })
        .collect()
}
