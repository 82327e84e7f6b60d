use num_complex::Complex64 as C64;
use proptest::prelude::*;

use twobubble::ground_state::{c_n, constants_closed_form, constants_compute, energy, w_field, w_profile, w_real};
use twobubble::radial_core::{Grading, RadialField, RadialGrid};

#[test]
fn frozen_ground_state_constants() {
    assert!((c_n(13) - 66279.394).abs() < 1e-3);
    let c = constants_closed_form(13).unwrap();
    assert!((w_profile(13, 0.0) - c.c_n).abs() < 1e-9 * c.c_n);
    assert!(c.c1 > 0.0 && c.w_mass > 0.0 && c.e_w > 0.0);
    assert!((c.blowup_exponent - 2.0).abs() < 1e-15);
}

#[test]
fn quadrature_matches_closed_forms_on_default_grid() {
    let g = RadialGrid::default_for(13).unwrap();
    let rep = constants_compute(13, &g).unwrap();
    for c in &rep.checks {
        assert!(c.rel_err < 1e-8, "{} {}", c.name, c.rel_err);
    }
}

#[test]
fn bilaplacian_band_is_symmetric() {
    let g = RadialGrid::build(13, 200.0, 512, Grading::default()).unwrap();
    assert!(g.bilap_band().asymmetry() < 1e-10);
}

#[test]
fn small_dimension_rejected() {
    assert!(RadialGrid::build(11, 200.0, 512, Grading::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rescaled_ground_state_solves_the_profile_equation(lambda in 0.3f64..3.0) {
        let g = RadialGrid::build(13, 200.0 * lambda, 2048, Grading::Tangent { scale: lambda }).unwrap();
        let w = w_real(&g, lambda).unwrap();
        let b = g.bilaplacian(&w);
        let e = 17.0 / 9.0;
        let worst = g.nodes().iter().zip(w.iter().zip(&b))
            .filter(|(r, _)| **r >= 0.01 * lambda && **r <= 50.0 * lambda)
            .map(|(_, (w, b))| (b - w.powf(e)).abs() / w.powf(e))
            .fold(0.0, f64::max);
        prop_assert!(worst < 1e-5, "{}", worst);
    }

    #[test]
    fn energy_is_scale_and_phase_invariant(lambda in 0.5f64..2.0, phase in 0.0f64..std::f64::consts::TAU) {
        let g = RadialGrid::build(13, 400.0, 2048, Grading::Tangent { scale: lambda }).unwrap();
        let w1 = w_field(&g, 1.0).unwrap();
        let wl = w_field(&g, lambda).unwrap().scale(C64::from_polar(1.0, phase));
        let (a, b) = (energy(&w1).value, energy(&wl).value);
        prop_assert!((a - b).abs() < 1e-6 * a.abs(), "{} {}", a, b);
    }

    #[test]
    fn interpolation_reproduces_smooth_fields(r in 0.01f64..30.0) {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        let f = RadialField::from_fn(g.clone(), |s| C64::new((-s * s / 8.0).exp(), s / (1.0 + s * s)));
        let got = g.interpolate(&f.values, r);
        let want = C64::new((-r * r / 8.0).exp(), r / (1.0 + r * r));
        prop_assert!((got - want).norm() < 1e-6, "{} {}", got, want);
    }
}
