//! Iterated averaging along a chain of periodic frequencies.
//!
//! The time-one map of the flow of `χ` acts as `F ↦ e^{L_χ}F` with
//! `L_χ F = {F, χ}`. Writing `φ = f - [f]`, `A = {h - l + g + f, χ}` and
//! `B = A - φ`, one step gives
//!
//! ```text
//! h + g + f  ↦  h + (g + [f]) + (A + Σ_{k≥2} L_χ^{k-1} B / k!)
//! ```
//!
//! since `{l, χ} = -φ`. The series is truncated at depth `N` and the rest is
//! bounded geometrically from the bracket estimate.

use super::algebra::{AlgebraError, TrigPolyHamiltonian};
use super::averaging::{average_along, homological_solve};
use super::norms::{term_vf, weighted_vf_norm, AnalyticDomain, DomainError};
use crate::constants::ImplicitConstants;
use crate::diophantine::{resonance_module, DiophantineError, PeriodicVector};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Diophantine(#[from] DiophantineError),
    #[error("truncation depth must be at least 2 (got {0})")]
    TruncationTooSmall(usize),
    #[error("resonant part does not commute with ω·I")]
    NotCommuting,
    #[error("expected one domain per frequency: {omegas} frequencies, {domains} domains")]
    CountMismatch { omegas: usize, domains: usize },
    #[error("stage {stage}: domain nesting violated: {detail}")]
    Nesting { stage: usize, detail: String },
    #[error("stage {stage}, step {step}: Lie series ratio {ratio:.3e} >= 1")]
    StepRejected { stage: usize, step: usize, ratio: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    /// Lie series depth `N`.
    pub truncation: usize,
    /// `s₁/r₁` in the weighted norm.
    pub weight: f64,
    /// Loss of analyticity per step.
    pub r_prime: f64,
    pub s_prime: f64,
    /// Size `ε̃` entering the predicted factor.
    pub eps_tilde: f64,
    /// `r_j` of the current stage.
    pub stage_r: f64,
    /// Terms whose vector-field bound falls below `prune_rel·‖X_f‖` are dropped into the tail.
    pub prune_rel: f64,
    pub constants: ImplicitConstants,
}

#[derive(Debug, Clone)]
pub struct AveragingStep {
    pub g: TrigPolyHamiltonian,
    pub f: TrigPolyHamiltonian,
    pub chi: TrigPolyHamiltonian,
    /// Bound on everything dropped: the series tail plus pruned terms.
    pub tail: f64,
    pub ratio: f64,
    pub f_norm_before: f64,
    pub f_norm_after: f64,
    pub chi_norm: f64,
    pub predicted_factor: f64,
    pub measured_factor: f64,
}

/// Prunes terms below `threshold` in the weighted norm; returns the kept part and the dropped mass.
fn prune_vf(
    f: &TrigPolyHamiltonian,
    dom: &AnalyticDomain,
    weight: f64,
    threshold: f64,
) -> (TrigPolyHamiltonian, f64) {
    // Valid for any centre: |(c + J)^α| <= (|c| + ρ)^{|α|}.
    let rho = dom.center_offset() + dom.action_radius();
    let mut dropped = 0.0;
    let mut kept = TrigPolyHamiltonian::zero(f.dim());
    for (m, c) in f.terms() {
        let v = term_vf(m, c, rho, dom.s, weight);
        if v < threshold {
            dropped += v;
        } else {
            kept.add_term(m.clone(), *c);
        }
    }
    (kept, dropped)
}

fn inv_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc / i as f64)
}

/// One averaging step along `ω` on `dom`; the output lives on `dom` shrunk by `(r', s')`.
pub fn averaging_step(
    h: &TrigPolyHamiltonian,
    g: &TrigPolyHamiltonian,
    f: &TrigPolyHamiltonian,
    omega: &PeriodicVector,
    dom: &AnalyticDomain,
    p: &StepParams,
) -> Result<AveragingStep, NormalFormError> {
    if p.truncation < 2 {
        return Err(NormalFormError::TruncationTooSmall(p.truncation));
    }
    if g.terms().any(|(m, _)| !omega.is_resonant(&m.k_i64())) {
        return Err(NormalFormError::NotCommuting);
    }
    let shrunk = dom.shrink(p.r_prime, p.s_prime);
    let w = p.weight;
    let f_norm_before = weighted_vf_norm(f, dom, w);
    let period = omega.real_period().to_f64().unwrap_or(f64::NAN);
    let predicted_factor =
        p.constants.step * period * (p.stage_r / p.s_prime + p.eps_tilde / p.r_prime);

    let fa = average_along(f, omega);
    let g_plus = g.checked_add(&fa)?;
    let chi = homological_solve(f, omega);
    if chi.is_zero() {
        return Ok(AveragingStep {
            g: g_plus,
            f: TrigPolyHamiltonian::zero(f.dim()),
            chi,
            tail: 0.0,
            ratio: 0.0,
            f_norm_before,
            f_norm_after: 0.0,
            chi_norm: 0.0,
            predicted_factor,
            measured_factor: 0.0,
        });
    }
    let chi_norm = weighted_vf_norm(&chi, dom, w);
    let ratio = E * p.constants.bracket * chi_norm / p.r_prime;
    if ratio >= 1.0 {
        return Err(NormalFormError::StepRejected { stage: 0, step: 0, ratio });
    }

    let l = TrigPolyHamiltonian::linear(&omega.to_f64());
    let driver = h.checked_sub(&l)?.checked_add(g)?.checked_add(f)?;
    let a = driver.bracket(&chi)?;
    let phi = f.checked_sub(&fa)?;
    let b = a.checked_sub(&phi)?;
    let threshold = p.prune_rel * f_norm_before;

    let (mut f_plus, mut dropped) = prune_vf(&a, &shrunk, w, threshold);
    let mut cur = b.clone();
    for k in 2..=p.truncation {
        // cur enters with weight 1/k!, so prune against threshold·k!.
        let (pruned, d) = prune_vf(&cur.bracket(&chi)?, dom, w, threshold / inv_factorial(k));
        cur = pruned;
        dropped += d * inv_factorial(k) / (1.0 - ratio);
        if cur.is_zero() {
            break;
        }
        f_plus = f_plus.checked_add(&cur.scale(inv_factorial(k)))?;
    }
    let n = p.truncation as f64;
    let series_tail = weighted_vf_norm(&b, dom, w) * ratio.powi(p.truncation as i32) / ((n + 1.0) * (1.0 - ratio));
    let tail = series_tail + dropped;
    let f_norm_after = weighted_vf_norm(&f_plus, &shrunk, w);
    let measured_factor = if f_norm_before > 0.0 { (f_norm_after + tail) / f_norm_before } else { 0.0 };
    Ok(AveragingStep {
        g: g_plus,
        f: f_plus,
        chi,
        tail,
        ratio,
        f_norm_before,
        f_norm_after,
        chi_norm,
        predicted_factor,
        measured_factor,
    })
}

/// `e^{L_χ}F` truncated at depth `N`, with its tail bound for geometric ratio `q`.
///
/// Terms below `prune_rel·‖F‖` are dropped and their mass added to the tail.
pub fn lie_transform(
    f: &TrigPolyHamiltonian,
    chi: &TrigPolyHamiltonian,
    truncation: usize,
    dom: &AnalyticDomain,
    weight: f64,
    q: f64,
    prune_rel: f64,
) -> Result<(TrigPolyHamiltonian, f64), NormalFormError> {
    let f_norm = weighted_vf_norm(f, dom, weight);
    let threshold = prune_rel * f_norm;
    let mut out = f.clone();
    let mut cur = f.clone();
    let mut dropped = 0.0;
    for k in 1..=truncation {
        let (pruned, d) = prune_vf(&cur.bracket(chi)?, dom, weight, threshold / inv_factorial(k));
        cur = pruned;
        dropped += d * inv_factorial(k) / (1.0 - q);
        if cur.is_zero() {
            return Ok((out, dropped));
        }
        out = out.checked_add(&cur.scale(inv_factorial(k)))?;
    }
    let tail = f_norm * q.powi(truncation as i32 + 1) / (1.0 - q);
    Ok((out, tail + dropped))
}

#[derive(Debug, Clone, Copy)]
pub struct NormalFormOptions {
    /// Steps per stage `m`.
    pub steps: usize,
    pub truncation: usize,
    pub prune_rel: f64,
    pub constants: ImplicitConstants,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        Self { steps: 4, truncation: 4, prune_rel: 1e-13, constants: ImplicitConstants::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub stage: usize,
    pub step: usize,
    /// Weighted vector-field bound of the active remainder after the step, tail included.
    pub remainder_norm: f64,
    /// Majorant of `∂_θ` of the same remainder.
    pub angular_norm: f64,
    pub contraction: f64,
    pub predicted_factor: f64,
    pub tail: f64,
    pub generator_norm: f64,
    pub series_ratio: f64,
    /// Terms kept in the remainder after the step.
    pub terms: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub stage: usize,
    pub input_norm: f64,
    pub output_norm: f64,
    /// Norm of the earlier remainder carried through this stage.
    pub carried_norm: f64,
    pub steps_taken: usize,
}

#[derive(Debug, Clone)]
pub struct NormalFormResult {
    /// `h + g + f` in the original action coordinates.
    pub transformed: TrigPolyHamiltonian,
    pub h: TrigPolyHamiltonian,
    pub resonant: TrigPolyHamiltonian,
    pub remainder: TrigPolyHamiltonian,
    pub generator_log: Vec<TrigPolyHamiltonian>,
    pub remainder_norms: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub stages: Vec<StageSummary>,
    pub m: usize,
}

impl NormalFormResult {
    /// Norm of the final total remainder on the last `2r/3, 2s/3` domain.
    pub fn final_remainder_norm(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.output_norm + s.carried_norm)
    }
}

/// Splits `H` into its unperturbed part (angle-free, grade 0) and the rest.
pub fn split_hamiltonian(hamiltonian: &TrigPolyHamiltonian) -> (TrigPolyHamiltonian, TrigPolyHamiltonian) {
    let h = hamiltonian.filter(|m, _| m.is_angle_free() && m.grade == 0);
    let f = hamiltonian.filter(|m, _| !(m.is_angle_free() && m.grade == 0));
    (h, f)
}

fn action_gradient(h: &TrigPolyHamiltonian, x: &[f64]) -> Vec<f64> {
    let zeros = vec![0.0; x.len()];
    (0..x.len()).map(|i| h.d_action(i).eval_real(&zeros, x)).collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Checks the window clause `|∇h(c_j) - ω_j| <= radius_j` and the real-part
/// inclusion of each domain in the `2/3` shrink of its predecessor.
pub fn check_domains(
    h: &TrigPolyHamiltonian,
    omegas: &[PeriodicVector],
    doms: &[AnalyticDomain],
) -> Result<(), NormalFormError> {
    if omegas.len() != doms.len() {
        return Err(NormalFormError::CountMismatch { omegas: omegas.len(), domains: doms.len() });
    }
    for (j, (w, d)) in omegas.iter().zip(doms).enumerate() {
        d.validate()?;
        let Some(a) = &d.anchor else { continue };
        let gap = sup_dist(&action_gradient(h, &a.center), &w.to_f64());
        if gap > a.radius {
            return Err(NormalFormError::Nesting {
                stage: j + 1,
                detail: format!("|∇h(center) - ω| = {gap:.3e} exceeds the window radius {:.3e}", a.radius),
            });
        }
        if j == 0 {
            continue;
        }
        let prev = &doms[j - 1];
        if d.s > 2.0 * prev.s / 3.0 || d.r > 2.0 * prev.r / 3.0 {
            return Err(NormalFormError::Nesting {
                stage: j + 1,
                detail: format!("(r, s) = ({:.3e}, {:.3e}) not within 2/3 of ({:.3e}, {:.3e})", d.r, d.s, prev.r, prev.s),
            });
        }
        if let Some(pa) = &prev.anchor {
            let reach = sup_dist(&a.center, &pa.center) + a.radius + d.r;
            let room = pa.radius + 2.0 * prev.r / 3.0;
            if reach > room {
                return Err(NormalFormError::Nesting {
                    stage: j + 1,
                    detail: format!("real part reaches {reach:.3e} from the previous centre, room {room:.3e}"),
                });
            }
        }
    }
    Ok(())
}

fn recenter(dom: &AnalyticDomain) -> AnalyticDomain {
    let mut d = dom.clone();
    if let Some(a) = &mut d.anchor {
        a.center.iter_mut().for_each(|c| *c = 0.0);
    }
    d
}

/// Runs `m` averaging steps along each frequency in turn.
pub fn normal_form(
    hamiltonian: &TrigPolyHamiltonian,
    omegas: &[PeriodicVector],
    doms: &[AnalyticDomain],
    opts: &NormalFormOptions,
) -> Result<NormalFormResult, NormalFormError> {
    let n = hamiltonian.dim();
    if opts.truncation < 2 {
        return Err(NormalFormError::TruncationTooSmall(opts.truncation));
    }
    resonance_module(n, omegas)?;
    let (h, f0) = split_hamiltonian(hamiltonian);
    check_domains(&h, omegas, doms)?;
    let m = opts.steps;
    if m == 0 || omegas.is_empty() {
        return Ok(NormalFormResult {
            transformed: hamiltonian.clone(),
            h,
            resonant: TrigPolyHamiltonian::zero(n),
            remainder: f0,
            generator_log: Vec::new(),
            remainder_norms: Vec::new(),
            steps: Vec::new(),
            stages: Vec::new(),
            m,
        });
    }

    let weight = doms[0].s / doms[0].r;
    // Each stage works in actions centred on its anchor.
    let mut center = vec![0.0; n];
    let mut h_loc = h.clone();
    let mut active = f0.clone();
    let mut carried = TrigPolyHamiltonian::zero(n);
    let mut g = TrigPolyHamiltonian::zero(n);
    let mut generator_log = Vec::new();
    let mut steps = Vec::new();
    let mut stages = Vec::new();

    for (j, (omega, dom_global)) in omegas.iter().zip(doms).enumerate() {
        if let Some(a) = &dom_global.anchor {
            let delta: Vec<f64> = a.center.iter().zip(&center).map(|(x, y)| x - y).collect();
            if delta.iter().any(|&d| d != 0.0) {
                h_loc = h_loc.shift_actions(&delta);
                active = active.shift_actions(&delta);
                carried = carried.shift_actions(&delta);
                g = g.shift_actions(&delta);
            }
            center = a.center.clone();
        }
        let dom = recenter(dom_global);
        if j > 0 {
            // The previous resonant part becomes the new perturbation.
            carried = carried.checked_add(&active)?;
            active = std::mem::replace(&mut g, TrigPolyHamiltonian::zero(n));
        }
        let r_prime = dom.r / (3.0 * m as f64);
        let s_prime = dom.s / (3.0 * m as f64);
        let input_norm = weighted_vf_norm(&active, &dom, weight);
        let mut carried_tail = 0.0;
        let mut steps_taken = 0;
        for i in 0..m {
            let step_dom = dom.shrink(i as f64 * r_prime, i as f64 * s_prime);
            if active.is_zero() {
                break;
            }
            let params = StepParams {
                truncation: opts.truncation,
                weight,
                r_prime,
                s_prime,
                eps_tilde: input_norm,
                stage_r: dom.r,
                prune_rel: opts.prune_rel,
                constants: opts.constants,
            };
            let out = averaging_step(&h_loc, &g, &active, omega, &step_dom, &params).map_err(|e| match e {
                NormalFormError::StepRejected { ratio, .. } => {
                    NormalFormError::StepRejected { stage: j + 1, step: i + 1, ratio }
                }
                other => other,
            })?;
            if !carried.is_zero() {
                let (moved, t) = lie_transform(&carried, &out.chi, opts.truncation, &step_dom, weight, out.ratio, opts.prune_rel)?;
                carried = moved;
                carried_tail += t;
            }
            let next_dom = step_dom.shrink(r_prime, s_prime);
            let angular_norm = (0..n)
                .map(|k| super::norms::majorant_norm(&out.f.d_theta(k), &next_dom))
                .fold(0.0, f64::max);
            let remainder_norm = out.f_norm_after + out.tail;
            steps.push(StepRecord {
                stage: j + 1,
                step: i + 1,
                remainder_norm,
                angular_norm,
                contraction: out.measured_factor,
                predicted_factor: out.predicted_factor,
                tail: out.tail,
                generator_norm: out.chi_norm,
                series_ratio: out.ratio,
                terms: out.f.len() + carried.len(),
            });
            generator_log.push(out.chi.shift_actions(&center.iter().map(|c| -c).collect::<Vec<_>>()));
            g = out.g;
            active = out.f;
            steps_taken += 1;
        }
        let end_dom = dom.shrink(dom.r / 3.0, dom.s / 3.0);
        let tail_now = steps.last().filter(|s| s.stage == j + 1).map_or(0.0, |s| s.tail);
        stages.push(StageSummary {
            stage: j + 1,
            input_norm,
            output_norm: weighted_vf_norm(&active, &end_dom, weight) + tail_now,
            carried_norm: weighted_vf_norm(&carried, &end_dom, weight) + carried_tail,
            steps_taken,
        });
    }

    let back: Vec<f64> = center.iter().map(|c| -c).collect();
    let resonant = g.shift_actions(&back);
    let remainder = carried.checked_add(&active)?.shift_actions(&back);
    let transformed = h.checked_add(&resonant)?.checked_add(&remainder)?;
    let remainder_norms = steps.iter().map(|s| s.remainder_norm).collect();
    Ok(NormalFormResult {
        transformed,
        h,
        resonant,
        remainder,
        generator_log,
        remainder_norms,
        steps,
        stages,
        m,
    })
}

/// The planar test case `½|I|² + ε[sin 2π(θ₁+θ₂) + cos 2π(θ₁-θ₂)]` with the
/// frequency chain `ω₁ = (1, 1)`, `ω₂ = (1, 1 + 1/50)` and matching domains.
pub fn two_frequency_case(eps: f64) -> (TrigPolyHamiltonian, Vec<PeriodicVector>, Vec<AnalyticDomain>) {
    let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
    let f = TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], eps, 1)
        .checked_add(&TrigPolyHamiltonian::cos_mode(&[1, -1], &[0, 0], eps, 1))
        .expect("same dimension");
    let hamiltonian = h.checked_add(&f).expect("same dimension");
    let w1 = PeriodicVector::from_integers(&[1, 1]).expect("nonzero");
    let w2 = PeriodicVector::from_ratio(&[50, 51], 50).expect("nonzero");
    let window = 175.0;
    let (r1, s1) = (2e-4, 0.05);
    let (r2, s2) = (3e-4 / window, 0.03);
    let d1 = AnalyticDomain::nearly_periodic(r1, s1, 2.0, w1.to_f64(), w1.to_f64(), window).expect("valid");
    let d2 = AnalyticDomain::nearly_periodic(r2, s2, 2.0, w2.to_f64(), w2.to_f64(), window).expect("valid");
    (hamiltonian, vec![w1, w2], vec![d1, d2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_hamiltonian::algebra::tests::{arb_ham, max_coeff_diff};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn opts(m: usize) -> NormalFormOptions {
        NormalFormOptions { steps: m, ..Default::default() }
    }

    fn unit_params(eps_tilde: f64) -> StepParams {
        StepParams {
            truncation: 4,
            weight: 2.0,
            r_prime: 0.01,
            s_prime: 0.01,
            eps_tilde,
            stage_r: 0.05,
            prune_rel: 0.0,
            constants: ImplicitConstants::default(),
        }
    }

    #[test]
    fn step_on_nonresonant_sine() {
        let eps = 1e-6;
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let f = TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], eps, 1);
        let g = TrigPolyHamiltonian::zero(2);
        let w = PeriodicVector::from_integers(&[1, 1]).unwrap();
        let dom = AnalyticDomain::nearly_periodic(0.05, 0.1, 2.0, vec![1.0, 1.0], vec![0.0, 0.0], 1.0).unwrap();
        let out = averaging_step(&h, &g, &f, &w, &dom, &unit_params(1e-5)).unwrap();
        assert!(out.g.is_zero());
        let expected = TrigPolyHamiltonian::cos_mode(&[1, 1], &[0, 0], -eps / (4.0 * PI), 1);
        assert!(max_coeff_diff(&out.chi, &expected) < 1e-20);
        // The remainder starts at grade 1 through {h - l, χ} and is otherwise grade >= 2.
        let grade1 = out.f.filter(|m, _| m.grade == 1);
        let lead = h.checked_sub(&TrigPolyHamiltonian::linear(&[1.0, 1.0])).unwrap().bracket(&out.chi).unwrap();
        assert!(max_coeff_diff(&grade1, &lead.filter(|m, _| m.grade == 1)) < 1e-20);
        assert!(out.f.filter(|m, _| m.grade >= 2).max_abs_coeff() < 1e-10);
        assert!(out.measured_factor < 1.0);
    }

    #[test]
    fn resonant_input_goes_to_g() {
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let f = TrigPolyHamiltonian::cos_mode(&[1, -1], &[0, 0], 1e-3, 1);
        let g = TrigPolyHamiltonian::constant(2, 0.5);
        let w = PeriodicVector::from_integers(&[1, 1]).unwrap();
        let dom = AnalyticDomain::new(0.05, 0.1, 1.0).unwrap();
        let out = averaging_step(&h, &g, &f, &w, &dom, &unit_params(1e-3)).unwrap();
        assert!(out.chi.is_zero());
        assert!(out.f.is_zero());
        assert_eq!(out.g, g.checked_add(&f).unwrap());
    }

    #[test]
    fn step_rejections() {
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let g = TrigPolyHamiltonian::sin_mode(&[1, 0], &[0, 0], 1.0, 1);
        let f = TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], 1.0, 1);
        let w = PeriodicVector::from_integers(&[1, 1]).unwrap();
        let dom = AnalyticDomain::new(0.05, 0.1, 1.0).unwrap();
        let p = unit_params(1.0);
        assert_eq!(averaging_step(&h, &g, &f, &w, &dom, &p).unwrap_err(), NormalFormError::NotCommuting);
        let zero = TrigPolyHamiltonian::zero(2);
        assert!(matches!(
            averaging_step(&h, &zero, &f, &w, &dom, &p),
            Err(NormalFormError::StepRejected { ratio, .. }) if ratio >= 1.0
        ));
        let bad = StepParams { truncation: 1, ..p };
        assert_eq!(averaging_step(&h, &zero, &f, &w, &dom, &bad).unwrap_err(), NormalFormError::TruncationTooSmall(1));
    }

    #[test]
    fn zero_steps_is_identity() {
        let (hm, omegas, doms) = two_frequency_case(1e-15);
        let out = normal_form(&hm, &omegas, &doms, &opts(0)).unwrap();
        assert_eq!(out.transformed, hm);
        assert!(out.resonant.is_zero());
        assert!(out.steps.is_empty());
    }

    #[test]
    fn zero_perturbation_terminates_early() {
        let h = TrigPolyHamiltonian::diagonal_quadratic(&[1.0, 1.0]);
        let (_, omegas, doms) = two_frequency_case(1e-15);
        let out = normal_form(&h, &omegas, &doms, &opts(5)).unwrap();
        assert!(out.steps.is_empty());
        assert!(out.remainder.is_zero() && out.resonant.is_zero());
    }

    #[test]
    fn two_stage_run() {
        let eps = 1e-15;
        let (hm, omegas, doms) = two_frequency_case(eps);
        let out = normal_form(&hm, &omegas, &doms, &opts(6)).unwrap();
        assert_eq!(out.stages.len(), 2);
        // M₂ is trivial: only k = 0 survives in the resonant part.
        assert!(out.resonant.terms().all(|(m, _)| m.is_angle_free()));
        for s in &out.steps {
            assert!(s.contraction <= (-1.0f64).exp(), "{s:?}");
            assert!(s.predicted_factor <= (-1.0f64).exp(), "{s:?}");
        }
        for pair in out.remainder_norms.windows(2).zip(out.steps.windows(2)) {
            let (norms, steps) = pair;
            if steps[0].stage == steps[1].stage {
                assert!(norms[1] <= norms[0] * (-1.0f64).exp());
            }
        }
        assert!(out.transformed.reality_defect() < 1e-25);
    }

    #[test]
    fn nesting_violations_are_reported() {
        let (hm, omegas, mut doms) = two_frequency_case(1e-15);
        doms[1].s = 0.04;
        assert!(matches!(normal_form(&hm, &omegas, &doms, &opts(2)), Err(NormalFormError::Nesting { stage: 2, .. })));
        let (_, _, mut doms) = two_frequency_case(1e-15);
        doms[1].anchor.as_mut().unwrap().center = vec![1.0, 1.2];
        assert!(matches!(normal_form(&hm, &omegas, &doms, &opts(2)), Err(NormalFormError::Nesting { .. })));
        let dependent = vec![omegas[0].clone(), PeriodicVector::from_integers(&[2, 2]).unwrap()];
        assert!(matches!(normal_form(&hm, &dependent, &doms, &opts(2)), Err(NormalFormError::Diophantine(_))));
    }

    fn arb_resonant_for(k_perp: [i32; 3]) -> impl Strategy<Value = TrigPolyHamiltonian> {
        // Modes in the orthogonal complement of (1, 1, 0)-style integer frequencies.
        arb_ham(3, 6).prop_map(move |f| {
            f.filter(|m, _| m.k.iter().zip(k_perp).map(|(a, b)| a * b).sum::<i32>() == 0)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn commuting_average(g in arb_resonant_for([1, 1, 0]), w2 in prop::collection::vec(-4i64..=4, 3)) {
            let w1 = PeriodicVector::from_integers(&[1, 1, 0]).unwrap();
            let Ok(w2) = PeriodicVector::from_integers(&w2) else { return Ok(()) };
            let avg = average_along(&g, &w2);
            let chi = homological_solve(&g, &w2);
            prop_assert!(avg.terms().all(|(m, _)| w1.is_resonant(&m.k_i64())));
            prop_assert!(chi.terms().all(|(m, _)| w1.is_resonant(&m.k_i64())));
        }

        #[test]
        fn bracket_estimate(f in arb_ham(2, 4), g in arb_ham(2, 4), fr in 0.1f64..0.9) {
            // [X_f, X_g] = -X_{f,g}; weight s/r kept equal to s'/r'.
            let (r, s) = (0.1, 0.3);
            let w = s / r;
            let dom = AnalyticDomain { r, s, big_r: 0.5, anchor: None };
            let (rp, sp) = (r * fr, s * fr);
            let lhs = weighted_vf_norm(&f.bracket(&g).unwrap(), &dom.shrink(rp, sp), w);
            let rhs = weighted_vf_norm(&f, &dom, w) * weighted_vf_norm(&g, &dom, w) / rp;
            let c = ImplicitConstants::default().bracket;
            prop_assert!(lhs <= c * rhs * (1.0 + 1e-12), "ratio {}", lhs / rhs);
        }
    }
}
