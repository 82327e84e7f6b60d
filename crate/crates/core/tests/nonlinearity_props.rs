use num_complex::Complex64 as C64;
use proptest::prelude::*;

use std::sync::OnceLock;

use twobubble::nonlinearity::{big_f, f_eval, fprime_apply, lemma21_check, lemma21_ratio, InequalityId};

fn z() -> impl Strategy<Value = C64> {
    (-8.0f64..8.0, 0.0f64..std::f64::consts::TAU).prop_map(|(l, a)| C64::from_polar(l.exp(), a))
}

#[test]
fn fitted_constants_are_frozen() {
    for (id, want) in [(InequalityId::I27a, 1.0), (InequalityId::I27b, 1.8667), (InequalityId::I210, 0.8898)] {
        let c = lemma21_check(id, 100_000, 0, 13).unwrap().fitted_constant;
        assert!((c - want).abs() < 1e-3, "{id}: {c}");
    }
}

fn constants() -> &'static Vec<f64> {
    static C: OnceLock<Vec<f64>> = OnceLock::new();
    C.get_or_init(|| InequalityId::ALL.iter().map(|id| lemma21_check(*id, 200_000, 3, 13).unwrap().fitted_constant).collect())
}

proptest! {
    #[test]
    fn phase_covariance(z in z(), phi in 0.0f64..std::f64::consts::TAU) {
        let e = C64::from_polar(1.0, phi);
        let lhs = f_eval(e * z, 13);
        let rhs = e * f_eval(z, 13);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1e-300));
    }

    #[test]
    fn derivative_matches_difference_quotient(z in z(), w in z()) {
        let h = 1e-6 * z.norm() / w.norm();
        let fd = (f_eval(z + w * h, 13) - f_eval(z - w * h, 13)) / (2.0 * h);
        let an = fprime_apply(z, w, 13);
        prop_assert!((fd - an).norm() <= 1e-5 * an.norm().max(1e-300), "{} {}", fd, an);
    }

    #[test]
    fn potential_is_nonnegative_and_homogeneous(z in z(), s in 0.1f64..10.0) {
        let p = 8.0 / 9.0;
        prop_assert!(big_f(z, 13) >= 0.0);
        let a = big_f(z * s, 13);
        let b = s.powf(p + 2.0) * big_f(z, 13);
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn samples_stay_below_fitted_constants(z1 in z(), z2 in z()) {
        for (id, c) in InequalityId::ALL.iter().zip(constants()) {
            if let Some(r) = lemma21_ratio(*id, z1, z2, 13) {
                prop_assert!(r <= c * 1.05 + 1e-12, "{id}: {r} > {c}");
            }
        }
    }
}
