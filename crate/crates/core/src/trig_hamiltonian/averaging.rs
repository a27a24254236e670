use super::algebra::TrigPolyHamiltonian;
use crate::diophantine::PeriodicVector;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use std::f64::consts::PI;

/// Time average along the linear flow of `ω`: the resonant modes `k·ω = 0`.
pub fn average_along(f: &TrigPolyHamiltonian, omega: &PeriodicVector) -> TrigPolyHamiltonian {
    f.filter(|m, _| omega.is_resonant(&m.k_i64()))
}

/// Solution of `{χ, ω·I} = f - [f]` with `χ̂_k = f̂_k / (2πi k·ω)`.
pub fn homological_solve(f: &TrigPolyHamiltonian, omega: &PeriodicVector) -> TrigPolyHamiltonian {
    homological_solve_report(f, omega).0
}

/// Like [`homological_solve`], also returning the smallest divisor `|k·ω|` used.
pub fn homological_solve_report(
    f: &TrigPolyHamiltonian,
    omega: &PeriodicVector,
) -> (TrigPolyHamiltonian, Option<BigRational>) {
    let mut smallest: Option<BigRational> = None;
    let chi = TrigPolyHamiltonian::from_terms(
        f.dim(),
        f.terms().filter_map(|(m, c)| {
            let d = omega.divisor(&m.k_i64());
            if d.numer().sign() == num_bigint::Sign::NoSign {
                return None;
            }
            let ad = d.abs();
            if smallest.as_ref().is_none_or(|s| ad < *s) {
                smallest = Some(ad);
            }
            let df = d.to_f64().unwrap_or(f64::NAN);
            Some((m.clone(), c / Complex64::new(0.0, 2.0 * PI * df)))
        }),
    );
    (chi, smallest)
}

#[cfg(test)]
mod tests {
    use super::super::algebra::tests::{arb_ham, max_coeff_diff};
    use super::*;
    use crate::diophantine::smallest_divisor;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn diag_sine() -> TrigPolyHamiltonian {
        TrigPolyHamiltonian::sin_mode(&[1, 1], &[0, 0], 1.0, 0)
    }

    /// `(1/T) Σ f(θ + ω t_j, I)` over 64 equispaced times in one integer period.
    fn quadrature_average(f: &TrigPolyHamiltonian, omega: &PeriodicVector, th: &[f64], ac: &[f64]) -> f64 {
        let t = omega.period().to_f64().unwrap();
        let w = omega.to_f64();
        let npts = 64;
        (0..npts)
            .map(|j| {
                let tj = t * j as f64 / npts as f64;
                let shifted: Vec<f64> = th.iter().zip(&w).map(|(a, b)| a + b * tj).collect();
                f.eval_real(&shifted, ac)
            })
            .sum::<f64>()
            / npts as f64
    }

    #[test]
    fn averaging_examples() {
        let f = diag_sine();
        let anti = PeriodicVector::from_integers(&[1, -1]).unwrap();
        let diag = PeriodicVector::from_integers(&[1, 1]).unwrap();
        assert_eq!(average_along(&f, &anti), f);
        assert!(average_along(&f, &diag).is_zero());
    }

    #[test]
    fn homological_examples() {
        let f = diag_sine();
        let diag = PeriodicVector::from_integers(&[1, 1]).unwrap();
        let chi = homological_solve(&f, &diag);
        let expected = TrigPolyHamiltonian::cos_mode(&[1, 1], &[0, 0], -1.0 / (4.0 * PI), 0);
        assert!(max_coeff_diff(&chi, &expected) < 1e-16);
        // ω·∂_θ χ = f, checked pointwise.
        for th in [[0.1, 0.3], [0.7, 0.2]] {
            let lhs = chi.d_theta(0).eval_real(&th, &[0.0, 0.0]) + chi.d_theta(1).eval_real(&th, &[0.0, 0.0]);
            assert!((lhs - f.eval_real(&th, &[0.0, 0.0])).abs() < 1e-14);
        }
        let anti = PeriodicVector::from_integers(&[1, -1]).unwrap();
        assert!(homological_solve(&f, &anti).is_zero());
    }

    fn arb_omega() -> impl Strategy<Value = PeriodicVector> {
        (prop::collection::vec(-6i64..=6, 2), 1i64..=12)
            .prop_filter_map("nonzero", |(num, t)| PeriodicVector::from_ratio(&num, t).ok())
    }

    proptest! {
        #[test]
        fn homological_identity(f in arb_ham(2, 5), omega in arb_omega()) {
            let chi = homological_solve(&f, &omega);
            let l = TrigPolyHamiltonian::linear(&omega.to_f64());
            let lhs = chi.bracket(&l).unwrap();
            let rhs = &f - &average_along(&f, &omega);
            prop_assert!(max_coeff_diff(&lhs, &rhs) < 1e-12);
            prop_assert!(chi.reality_defect() < 1e-14);
        }

        #[test]
        fn average_matches_quadrature(f in arb_ham(2, 5), omega in arb_omega(), th in prop::collection::vec(0.0f64..1.0, 2)) {
            let ac = [0.3, -0.2];
            let avg = average_along(&f, &omega).eval_real(&th, &ac);
            prop_assert!((avg - quadrature_average(&f, &omega, &th, &ac)).abs() < 1e-10);
        }

        #[test]
        fn averaging_is_projection(f in arb_ham(3, 6), num in prop::collection::vec(-4i64..=4, 3)) {
            let Ok(omega) = PeriodicVector::from_integers(&num) else { return Ok(()) };
            let a = average_along(&f, &omega);
            prop_assert_eq!(average_along(&a, &omega), a.clone());
            let dom = super::super::norms::AnalyticDomain { r: 0.1, s: 0.1, big_r: 1.0, anchor: None };
            prop_assert!(super::super::norms::majorant_norm(&a, &dom) <= super::super::norms::majorant_norm(&f, &dom) + 1e-15);
        }

        #[test]
        fn divisors_bounded_by_period(f in arb_ham(2, 5), omega in arb_omega()) {
            let (_, smallest) = homological_solve_report(&f, &omega);
            if let Some(d) = smallest {
                let t = BigRational::from_integer(omega.period().clone());
                prop_assert!(d.clone() * t >= BigRational::from_integer(1.into()));
                // Modes of f have |k|_1 <= 4, so the global minimum bounds it below.
                let global = smallest_divisor(&omega, 4).unwrap();
                prop_assert!(d >= global);
            }
        }
    }
}
