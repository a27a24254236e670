use super::integrator::{integrate, IntegratorOptions};
use super::DynamicsError;
use crate::trig_hamiltonian::TrigPolyHamiltonian;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub t_star: Option<f64>,
    pub censored: bool,
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingTable {
    pub delta: f64,
    pub horizon: f64,
    pub dt: f64,
    pub rows: Vec<ScalingRow>,
    /// Fit of `log t*` against `log ε` over the uncensored rows.
    pub fit: Option<LogLogFit>,
}

/// `δ / (2πε |cos 2πφ₀|)`, the escape time of the resonant counterexample.
pub fn fast_drift_time(eps: f64, delta: f64, phi0: f64) -> f64 {
    delta / (2.0 * PI * eps * (2.0 * PI * phi0).cos().abs())
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<LogLogFit> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogLogFit { slope, intercept: my - slope * mx, r_squared, points: points.len() })
}

/// Escape time of `|I(t) - I(0)|_∞ ≥ δ` for `h + ε f`, one run per `ε`.
pub fn stability_time(
    h: &TrigPolyHamiltonian,
    f: &TrigPolyHamiltonian,
    theta0: &[f64],
    action0: &[f64],
    epsilons: &[f64],
    delta: f64,
    opts: &IntegratorOptions,
) -> Result<ScalingTable, DynamicsError> {
    if !(delta > 0.0) {
        return Err(DynamicsError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(DynamicsError::InvalidParameter("epsilons must be positive and decreasing".into()));
    }
    let run_opts = IntegratorOptions { delta: Some(delta), stop_at_escape: true, ..opts.clone() };
    let rows: Result<Vec<ScalingRow>, DynamicsError> = epsilons
        .par_iter()
        .map(|&eps| {
            let ham = h.checked_add(&f.scale(eps)).map_err(|e| DynamicsError::InvalidParameter(e.to_string()))?;
            let tr = integrate(&ham, theta0, action0, &run_opts)?;
            Ok(ScalingRow { epsilon: eps, t_star: tr.escape_time, censored: tr.censored, max_drift: tr.max_drift })
        })
        .collect();
    let rows = rows?;
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.t_star.map(|t| (r.epsilon, t))).collect();
    Ok(ScalingTable { delta, horizon: opts.horizon, dt: opts.dt, fit: loglog_fit(&pts), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{convex_example, counterexample};

    fn unit_sine() -> TrigPolyHamiltonian {
        TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], 1.0, 1)
    }

    #[test]
    fn fast_drift_law() {
        let h = counterexample(0.0);
        let opts = IntegratorOptions { dt: 0.01, horizon: 1e4, stride: 1000, ..Default::default() };
        let eps = [1e-2, 1e-3, 1e-4];
        let tab = stability_time(&h, &unit_sine(), &[0.0, 0.0], &[0.2, 0.2], &eps, 0.1, &opts).unwrap();
        for r in &tab.rows {
            let want = fast_drift_time(r.epsilon, 0.1, 0.0);
            let got = r.t_star.unwrap();
            assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
        }
        assert!((fast_drift_time(1e-3, 0.1, 0.0) - 15.915494309189533).abs() < 1e-9);
        let fit = tab.fit.unwrap();
        assert!((fit.slope + 1.0).abs() < 0.05);
    }

    #[test]
    fn convex_family_is_censored_with_small_drift() {
        let h = convex_example(0.0);
        let opts = IntegratorOptions { dt: 0.05, horizon: 2e3, stride: 1000, ..Default::default() };
        let eps = [1e-3, 1e-4, 1e-5];
        let tab = stability_time(&h, &unit_sine(), &[0.0, 0.0], &[0.3, -0.3], &eps, 0.1, &opts).unwrap();
        assert!(tab.rows.iter().all(|r| r.censored));
        assert!(tab.fit.is_none());
        // Pendulum libration in I₁ + I₂ has amplitude O(√ε).
        let c = tab.rows.iter().map(|r| r.max_drift / r.epsilon.sqrt()).fold(0.0, f64::max);
        assert!(c < 1.0, "{c}");
        for w in tab.rows.windows(2) {
            assert!(w[1].max_drift <= w[0].max_drift);
        }
    }

    #[test]
    fn censoring_is_monotone_in_eps() {
        let h = convex_example(0.0);
        let opts = IntegratorOptions { dt: 0.05, horizon: 500.0, stride: 1000, ..Default::default() };
        let eps = [0.3, 0.1, 3e-2, 1e-2, 1e-3];
        let tab = stability_time(&h, &unit_sine(), &[0.0, 0.0], &[0.3, -0.3], &eps, 0.1, &opts).unwrap();
        let first = tab.rows.iter().position(|r| r.censored).unwrap_or(eps.len());
        assert!(tab.rows[first..].iter().all(|r| r.censored));
    }

    #[test]
    fn rejects_bad_lists() {
        let h = counterexample(0.0);
        let opts = IntegratorOptions::default();
        assert!(stability_time(&h, &unit_sine(), &[0.0; 2], &[0.0; 2], &[1e-3, 1e-2], 0.1, &opts).is_err());
        assert!(stability_time(&h, &unit_sine(), &[0.0; 2], &[0.0; 2], &[1e-3], -0.1, &opts).is_err());
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 5.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-1.5))).collect();
        let f = loglog_fit(&pts).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
    }
}
