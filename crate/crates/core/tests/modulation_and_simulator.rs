use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use twobubble::ground_state::{constants_closed_form, w_field};
use twobubble::linearized::{solve_eigenpair, EigenPair};
use twobubble::modulation::{closed_form_residual, cube_coords, cube_inverse, integrate_reduced, BubbleParams, Coupling, Modulator, ReducedModel};
use twobubble::ode::Tolerance;
use twobubble::radial_core::{Grading, RadialField, RadialGrid};
use twobubble::simulator::{reduced_exit, run, Face, SimConfig, Stepper};

fn pair() -> &'static Arc<EigenPair> {
    static P: OnceLock<Arc<EigenPair>> = OnceLock::new();
    P.get_or_init(|| {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        Arc::new(solve_eigenpair(&g).unwrap())
    })
}

fn grid() -> &'static Arc<RadialGrid> {
    static G: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    G.get_or_init(|| RadialGrid::build(13, 200.0, 2048, Grading::default()).unwrap())
}

fn model(n: usize, coupling: Coupling) -> ReducedModel {
    ReducedModel::new(constants_closed_form(n).unwrap(), pair().nu, coupling).unwrap()
}

#[test]
fn closed_form_law_in_higher_dimensions() {
    for n in [13, 14, 16] {
        let m = model(n, Coupling::Normalized);
        let ts: Vec<f64> = (0..40).map(|i| -1e4 * 10f64.powf(-2.0 * i as f64 / 39.0)).collect();
        assert!(closed_form_residual(&m, &ts) < 1e-10, "N = {n}");
        let s0 = m.state_from_cube(-1e4, [0.0; 3]);
        let run = integrate_reduced(&m, &s0, &ts, Tolerance::default()).unwrap();
        for st in &run.states {
            let want = m.lambda_cf(st.t);
            assert!((st.params.lambda - want).abs() < 1e-7 * want, "N = {n}, t = {}", st.t);
        }
    }
}

#[test]
fn theta_decays_along_the_closed_form() {
    let m = model(13, Coupling::Normalized);
    let mut s0 = m.state_from_cube(-1e3, [0.0; 3]);
    s0.params.theta = 0.1;
    let run = integrate_reduced(&m, &s0, &[-5e2, -1e2], Tolerance::default()).unwrap();
    for st in &run.states {
        let want = m.theta_cf(-1e3, 0.1, st.t);
        assert!((st.params.theta - want).abs() < 1e-7 * want.abs(), "{} {}", st.params.theta, want);
    }
}

#[test]
fn zero_field_stays_zero() {
    let z = RadialField::zeros(grid().clone());
    let cfg = SimConfig { t_start: 0.0, t_end: 1e-3, dt: 1e-4, output_stride: 2, decomposition: false, seed: 0 };
    let tr = run(&z, &cfg, None).unwrap();
    assert!(tr.last.unwrap().values.iter().all(|v| *v == C64::new(0.0, 0.0)));
}

#[test]
fn invalid_time_step_rejected() {
    let cfg = SimConfig { t_start: 0.0, t_end: 1.0, dt: -1e-4, output_stride: 1, decomposition: false, seed: 0 };
    assert!(cfg.validate().is_err());
    let cfg = SimConfig { dt: 1e-4, ..cfg };
    assert!(cfg.validate_for(0.05).is_err());
    assert!(Stepper::new(grid().clone(), f64::NAN).is_err());
}

#[test]
fn splitting_is_second_order_on_the_ground_state() {
    let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
    let w = w_field(&g, 1.0).unwrap();
    let drift = |dt: f64| {
        let steps = (2e-4 / dt).round() as usize;
        Stepper::new(g.clone(), dt).unwrap().advance(&w, steps).sub(&w).norm() / w.norm()
    };
    let (a, b) = (drift(4e-6), drift(2e-6));
    let order = (a / b).log2();
    assert!((order - 2.0).abs() < 0.2, "{a:e} {b:e} order {order}");
}

#[test]
fn boundary_points_exit_at_once() {
    let m = model(13, Coupling::Normalized);
    let e = reduced_exit(&m, -200.0, -15.0, [0.1, -0.5, 0.2]);
    assert_eq!(e.exit_face, Face::P1Minus);
    assert_eq!(e.exit_offset, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_recovers_parameters(dz in -0.01f64..0.01, dm in -0.02f64..0.02, th in -0.01f64..0.01, lam in 0.03f64..0.08) {
        let g = RadialGrid::build(13, 200.0, 2048, Grading::Tangent { scale: lam.sqrt() }).unwrap();
        let m = Modulator::new(g, pair().clone());
        let p = BubbleParams::new(-std::f64::consts::FRAC_PI_2 + dz, 1.0 + dm, th, lam).unwrap();
        let (f, _) = m.decompose(&m.ansatz(&p), BubbleParams::canonical(lam), 0.0).unwrap();
        let e = f.params.as_array().iter().zip(p.as_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(e < 1e-8, "{:?} vs {:?}", f.params, p);
    }

    #[test]
    fn cube_coordinates_round_trip(t in -1e4f64..-10.0, p0 in -0.5f64..0.5, p1 in -0.5f64..0.5, p2 in -0.5f64..0.5) {
        let m = model(13, Coupling::Amplitude);
        let (l, a1, a2) = cube_inverse(&m, t, [p0, p1, p2]);
        let q = cube_coords(&m, t, l, a1, a2);
        for (x, y) in q.iter().zip([p0, p1, p2]) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn stepper_commutes_with_phase(phi in 0.0f64..std::f64::consts::TAU, amp in 0.1f64..2.0) {
        let st = Stepper::new(grid().clone(), 1e-4).unwrap();
        let u = RadialField::from_fn(grid().clone(), |r| C64::new(amp, 0.3 * r) * (-r * r / 4.0).exp());
        let e = C64::from_polar(1.0, phi);
        let a = st.advance(&u.scale(e), 5);
        let b = st.advance(&u, 5).scale(e);
        prop_assert!(a.sub(&b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn mass_is_conserved(amp in 0.05f64..1.0, width in 1.0f64..4.0, chirp in -1.0f64..1.0) {
        let st = Stepper::new(grid().clone(), 1e-4).unwrap();
        let u = RadialField::from_fn(grid().clone(), |r| C64::new(amp, chirp * r) * (-(r / width).powi(2)).exp());
        let v = st.advance(&u, 50);
        prop_assert!((v.norm().powi(2) / u.norm().powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_time_decreases_with_distance_from_the_center(a in 0.01f64..0.45, b in 0.01f64..0.45) {
        let m = model(13, Coupling::Normalized);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-3);
        for s in [1.0, -1.0] {
            let near = reduced_exit(&m, -200.0, -15.0, [0.0, 0.0, s * lo]);
            let far = reduced_exit(&m, -200.0, -15.0, [0.0, 0.0, s * hi]);
            prop_assert!(near.exit_offset >= far.exit_offset, "{} {}", near.exit_offset, far.exit_offset);
            prop_assert_eq!(far.exit_face.axis(), Some((2, s)));
        }
    }
}
