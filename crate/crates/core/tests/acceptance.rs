//! Acceptance criteria 1 to 11, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). The process fails only when a
//! criterion outside `KNOWN_RED` fails.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twobubble::cli::{w_residual, RunConfig};
use twobubble::ground_state::{c_tilde_residual, constants_closed_form, constants_compute, energy, w_field, w_profile};
use twobubble::linearized::{alpha_project, coercivity_min_eig, solve_eigenpair, EigenPair, FormId, LinOps};
use twobubble::modulation::{closed_form_residual, integrate_reduced, Coupling, Modulator, ReducedModel, ReducedState};
use twobubble::nonlinearity::{lemma21_check, InequalityId};
use twobubble::ode::Tolerance;
use twobubble::radial_core::{Grading, RadialField, RadialGrid};
use twobubble::simulator::{conservation_audit, reduced_exit, run, shoot, two_bubble_experiment, SimConfig, Stepper};
use twobubble::virial::{apply_virial, build_q, scaling_defect, virial_audit, VirialKind};
use twobubble::Result;

const N: usize = 13;

/// Criteria expected to fail, with the reason printed next to them.
const KNOWN_RED: &[(usize, &str)] = &[];

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome { pass: true, lines: Vec::new() }
    }

    fn below(&mut self, what: &str, measured: f64, tol: f64) {
        self.record(what, measured < tol, format!("{measured:.3e} < {tol:.0e}"));
    }

    fn record(&mut self, what: &str, ok: bool, detail: String) {
        self.pass &= ok;
        self.lines.push(format!("    {} {what}: {detail}", if ok { "ok " } else { "BAD" }));
    }
}

struct Shared {
    grid: Arc<RadialGrid>,
    pair: Arc<EigenPair>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_ground_state(_: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let grid = RunConfig::default().grid()?;
    o.below("max relative residual on [0.01, 50]", w_residual(&grid, 0.01, 50.0)?, 1e-5);
    let ladder = [96, 128, 192];
    let mut errs = Vec::new();
    for n in ladder {
        let g = RadialGrid::build(N, 200.0, n, Grading::default())?;
        errs.push(w_residual(&g, 0.1, 10.0)?);
    }
    let order = (errs[0] / errs[2]).ln() / (ladder[2] as f64 / ladder[0] as f64).ln();
    o.record("observed order on n = 96..192, r in [0.1, 10]", order >= 4.0, format!("{order:.2} >= 4 ({:.2e} / {:.2e} / {:.2e})", errs[0], errs[1], errs[2]));
    Ok(o)
}

fn c2_constants(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let rep = constants_compute(N, &s.grid)?;
    for c in &rep.checks {
        o.below(&format!("{} vs closed form", c.name), c.rel_err, 1e-8);
    }
    o.below("E(W) = (2/N)∫|ΔW|²", rep.energy_identity, 1e-8);
    o.below("C̃ balance", c_tilde_residual(&rep.constants), 1e-10);
    Ok(o)
}

fn c3_spectral(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let sum = s.pair.summary();
    o.record("ν > 0", sum.nu > 0.0, format!("ν = {:.6}", sum.nu));
    o.below("eigen residual Y1 / ν", sum.residual_plus, 1e-6);
    o.below("eigen residual Y2 / ν", sum.residual_minus, 1e-6);
    o.record("⟨Y1, Y2⟩ > 0", sum.y1_dot_y2 > 0.0, format!("{:.4e}", sum.y1_dot_y2));
    o.below("|⟨W, Y1⟩|", sum.w_dot_y1.abs(), 1e-6);
    o.below("|⟨ΛW, Y2⟩|", sum.lw_dot_y2.abs(), 1e-6);
    let (km, kp) = LinOps::new(s.grid.clone()).kernel_residuals();
    o.below("∥L⁻W∥", km, 1e-5);
    o.below("∥L⁺ΛW∥", kp, 1e-5);
    Ok(o)
}

fn c4_coercivity(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let forms = [
        FormId::LPlus,
        FormId::LMinus,
        FormId::Mixed { theta: 0.0, lambda: 1.0 },
        FormId::TwoBubble { zeta: -FRAC_PI_2, mu: 1.0, theta: 0.0, lambda: 0.05 },
    ];
    let fine = RadialGrid::build(N, 200.0, 2048, Grading::default())?;
    let fine_pair = solve_eigenpair(&fine)?;
    for form in forms {
        let a = coercivity_min_eig(form, s.pair.grid(), &s.pair)?.min_eigenvalue_projected;
        let b = coercivity_min_eig(form, &fine, &fine_pair)?.min_eigenvalue_projected;
        let drift = rel(a, b);
        o.record(form.name(), a > 0.0 && b > 0.0 && drift < 0.05, format!("min {a:.4e} / {b:.4e} (1024 / 2048 nodes), change {drift:.2e} < 5e-2"));
    }
    let local = FormId::Localized { theta: 0.0, lambda: 1.0, c: 0.005, r1: Some(600.0) };
    let mut mins = Vec::new();
    for n in [2048, 4096] {
        let g = RadialGrid::build(N, 2000.0, n, Grading::Tangent { scale: 3.0 })?;
        let p = solve_eigenpair(&g)?;
        mins.push(coercivity_min_eig(local, &g, &p)?.min_eigenvalue_projected);
    }
    let drift = rel(mins[0], mins[1]);
    o.record(
        "localized, c = 0.005, r1 = 600, r_max = 2000",
        mins[0] > 0.0 && mins[1] > 0.0 && drift < 0.05,
        format!("min {:.4e} / {:.4e} (2048 / 4096 nodes), change {drift:.2e} < 5e-2", mins[0], mins[1]),
    );
    let tail = coercivity_min_eig(FormId::Localized { theta: 0.0, lambda: 1.0, c: 0.005, r1: None }, s.pair.grid(), &s.pair)?;
    o.lines.push(format!(
        "    note: with r1 from the 1% potential-tail rule (r1 = {:.2}) the localized minimum is {:.3e}; positivity needs r1 in the hundreds",
        tail.parameters.iter().find(|(k, _)| k == "r1").map(|p| p.1).unwrap_or(f64::NAN),
        tail.min_eigenvalue_projected
    ));
    Ok(o)
}

fn c5_inequalities(_: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    for id in InequalityId::ALL {
        let a = lemma21_check(id, 100_000, 0, N)?.fitted_constant;
        let b = lemma21_check(id, 200_000, 0, N)?.fitted_constant;
        let drift = rel(a, b);
        o.record(id.as_str(), a.is_finite() && b.is_finite() && drift < 0.1, format!("C = {a:.4e} / {b:.4e} (1e5 / 2e5 samples), change {drift:.2e} < 1e-1"));
    }
    Ok(o)
}

fn smooth_field(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialField {
    let terms: Vec<(C64, f64, f64)> = (0..3)
        .map(|_| (C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), rng.random_range(0.0..4.0), rng.random_range(0.3..2.0)))
        .collect();
    RadialField::from_fn(grid.clone(), |r| terms.iter().map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum())
}

fn c6_virial(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut all = true;
    let mut worst_sum = 0.0f64;
    let mut worst_junction = 0.0f64;
    for c in [0.1, 0.01] {
        for r in [1.0, 5.0, 10.0] {
            let q = build_q(N, c, r)?;
            for p in q.properties() {
                if !p.pass {
                    all = false;
                    o.lines.push(format!("    BAD c = {c}, R = {r}: {} worst {:.3e}", p.name, p.worst));
                }
            }
            worst_sum = worst_sum.max((q.coefficient_sum() - 0.5).abs());
            worst_junction = worst_junction.max(q.junction_mismatch());
        }
    }
    o.record("cutoff properties for c ∈ {0.1, 0.01}, R ∈ {1, 5, 10}", all, "pointwise".into());
    o.below("|Σcᵢ − ½|", worst_sum, 1e-12);
    o.below("C⁵ junction mismatch", worst_junction, 1e-8);

    let q = build_q(N, 0.1, 5.0)?;
    let w = w_field(&s.grid, 1.0)?;
    o.below("integration-by-parts identity at h = W", virial_audit(&q, 1.0, &w, 1.0).rel_diff, 1e-4);

    let mut anti = 0.0f64;
    for k in 0..100 {
        let lambda = [0.2, 1.0][k % 2];
        let h1 = smooth_field(&s.grid, &mut rng);
        let h2 = smooth_field(&s.grid, &mut rng);
        let a1 = apply_virial(&q, VirialKind::A0, lambda, &h1);
        let a2 = apply_virial(&q, VirialKind::A0, lambda, &h2);
        let scale = h1.norm() * a2.norm() + a1.norm() * h2.norm();
        anti = anti.max((h1.inner(&a2) + a1.inner(&h2)).abs() / scale);
    }
    o.below("antisymmetry of A₀, 100 random pairs", anti, 1e-8);

    let h = |r: f64| C64::new(1.0, 0.5) * (-r * r / 3.0).exp() * (1.0 + r);
    let mut sc = 0.0f64;
    for lambda in [0.05, 0.2, 1.0] {
        for kind in [VirialKind::A, VirialKind::A0] {
            sc = sc.max(scaling_defect(&q, kind, lambda, &s.grid, &h)?);
        }
    }
    o.below("scaling law for λ ∈ {0.05, 0.2, 1}", sc, 1e-8);
    Ok(o)
}

fn c7_reduced(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let model = ReducedModel::new(constants_closed_form(N)?, s.pair.nu, Coupling::Normalized)?;
    let ts: Vec<f64> = (0..200).map(|i| -1e4 * 10f64.powf(-2.0 * i as f64 / 199.0)).collect();
    o.below("closed form in the leading law", closed_form_residual(&model, &ts), 1e-10);

    let (t0, t1) = (-1e4, -1e2);
    let s0 = ReducedState { t: t0, ..model.state_from_cube(t0, [0.0; 3]) };
    let outs: Vec<f64> = ts.iter().copied().filter(|t| *t >= t0 && *t <= t1).collect();
    let runr = integrate_reduced(&model, &s0, &outs, Tolerance { rtol: 1e-12, atol: 1e-300 })?;
    let track = runr.states.iter().map(|st| rel(st.params.lambda, model.lambda_cf(st.t))).fold(0.0, f64::max);
    o.record(
        "integrated λ vs closed form on [−1e4, −1e2]",
        track < 1e-6 && runr.stopped.is_none() && runr.states.len() == outs.len(),
        format!("{track:.3e} < 1e-6"),
    );

    let tg0 = model.time_of_lambda(0.5);
    let tg = model.time_for_growth(tg0, 20.0);
    let sa = ReducedState { a1_plus: 1.0, a1_minus: 1.0, a2_plus: 1.0, a2_minus: 1.0, ..model.state_from_cube(tg0, [0.0; 3]) };
    let ra = integrate_reduced(&model, &sa, &[tg], Tolerance { rtol: 1e-13, atol: 1e-300 })?;
    let end = ra.states.last().copied().ok_or_else(|| twobubble::Error::Numerical(format!("no output: {:?}", ra.stopped)))?;
    let expo = model.unstable_exponent(tg0, tg);
    let tau = (tg - tg0) * model.nu;
    let ga = rel(end.a2_plus, expo.exp()).max(rel(end.a2_minus, (-expo).exp()));
    let gb = rel(end.a1_plus, tau.exp()).max(rel(end.a1_minus, (-tau).exp()));
    o.below("a₂± vs exp(±ν∫λ⁻⁴) over 20 e-folds from λ = 0.5", ga, 1e-8);
    o.below("a₁± vs exp(±νt)", gb, 1e-8);

    let ratio = model.lambda_cf(-100.0) / model.lambda_cf(-200.0);
    o.below("|λ(t)/λ(2t) − 4|", (ratio - 4.0).abs(), 1e-6);
    Ok(o)
}

fn c8_initial_data(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let model = ReducedModel::new(constants_closed_form(N)?, s.pair.nu, Coupling::Normalized)?;
    let nf = N as f64;
    let mut pts = Vec::new();
    let mut dom = 0.0f64;
    let mut orth = 0.0f64;
    let mut spec = 0.0f64;
    for t in [-1e2, -1e3, -1e4] {
        let lambda0 = model.lambda_cf(t);
        let grid = RadialGrid::build(N, 200.0, 8192, Grading::Tangent { scale: lambda0.sqrt() })?;
        let m = Modulator::new(grid, s.pair.clone());
        let env = 0.5 * (-t).powf(-(2.0 * nf - 13.0) / (2.0 * (nf - 12.0)));
        let id = m.initial_data(&model, t, lambda0, env, env)?;
        dom = dom.max(id.dominance);
        orth = orth.max(id.orthogonality.iter().fold(0.0, |a, b| a.max(b.abs())));
        let want = [env, 0.0, env, 0.0];
        spec = spec.max(id.spectral.iter().zip(want).map(|(a, b)| (a - b).abs() / env).fold(0.0, f64::max));
        pts.push(((-t).ln(), id.g_norm.ln()));
    }
    o.below("diagonal dominance ratio", dom, 1.0);
    o.below("orthogonality of g⁰", orth, 1e-8);
    o.below("spectral pairings of g⁰", spec, 1e-8);
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let target = -nf / (2.0 * (nf - 12.0));
    o.record("log-log slope of ∥g⁰∥ in |T|", rel(slope, target) < 0.1, format!("{slope:.4} vs {target:.2}, within 10%"));
    Ok(o)
}

fn c9_simulator(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let g = &s.grid;
    let pulse = RadialField::from_fn(g.clone(), |r| C64::new(0.5, 0.25 * r) * (-r * r / 4.0).exp());
    let cfg = SimConfig { t_start: 0.0, t_end: 1.0, dt: 1e-4, output_stride: 100, decomposition: false, seed: 0 };
    let rep = conservation_audit(&run(&pulse, &cfg, None)?);
    o.below("mass drift, pulse, dt = 1e-4, horizon 1", rep.mass_drift, 1e-10);
    o.below("energy drift, pulse, dt = 1e-4, horizon 1", rep.energy_drift, 1e-6);

    let w = w_field(g, 1.0)?;
    let st = Stepper::new(g.clone(), 1e-6)?;
    let wt = st.advance(&w, 1000);
    o.below("u0 = W after t = 1e-3 at dt = 1e-6", wt.sub(&w).norm() / w.norm(), 1e-5);
    let e0 = energy(&w).value;
    o.below("energy of W after t = 1e-3", rel(energy(&wt).value, e0), 1e-6);

    let lam: f64 = 0.5;
    let e = (N as f64 - 4.0) / 2.0;
    let g1 = RadialGrid::build(N, 200.0, 1024, Grading::default())?;
    let gl = RadialGrid::build(N, 200.0 * lam, 1024, Grading::Tangent { scale: lam })?;
    let bump = |r: f64| C64::new(1.0, 0.3) * 1e2 * (-(r - 1.0) * (r - 1.0)).exp();
    let u1 = RadialField::from_fn(g1.clone(), |r| w_profile(N, r) + bump(r));
    let ul = RadialField::from_fn(gl.clone(), |r| (w_profile(N, r / lam) + bump(r / lam)) * lam.powf(-e));
    let a = Stepper::new(g1, 1e-6)?.advance(&u1, 1000);
    let b = Stepper::new(gl, 1e-6 * lam.powi(4))?.advance(&ul, 1000);
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y * lam.powf(e)).norm_sqr()).sum::<f64>().sqrt()
        / a.values.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    o.below("scaling conjugacy λ = 0.5, 1000 steps", diff, 1e-5);

    let pair = &s.pair;
    let (y1, y2) = pair.y_on(g, 1.0);
    let y = RadialField::new(g.clone(), y1.iter().zip(&y2).map(|(a, b)| C64::new(*b, *a)).collect());
    let up = w.add(&y.scale(C64::from(1e-6 * w.norm() / y.norm())));
    let steps = (0.5 / pair.nu / 1e-6).round() as usize;
    let (p0, _) = alpha_project(pair, 0.0, 1.0, &up.sub(&w));
    let (p1, _) = alpha_project(pair, 0.0, 1.0, &st.advance(&up, steps).sub(&st.advance(&w, steps)));
    let ratio = (p1 / p0).ln() / (steps as f64 * 1e-6) / pair.nu;
    o.below("growth rate of a₂⁺ over ν", (ratio - 1.0).abs(), 0.05);
    o.lines.push("    note: conservation is measured on a small pulse; W is unstable with e-fold time 1/ν, so its stationarity is checked over one e-fold".into());
    Ok(o)
}

fn c10_two_bubble(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let model = ReducedModel::new(constants_closed_form(N)?, s.pair.nu, Coupling::Amplitude)?;
    let lambda0: f64 = 0.05;
    let grid = RadialGrid::build(N, 200.0, 4096, Grading::Tangent { scale: lambda0.sqrt() })?;
    let m = Modulator::new(grid, s.pair.clone());
    let q = build_q(N, 0.1, 5.0)?;
    let t = model.time_of_lambda(lambda0);
    let efold = lambda0.powi(4) / s.pair.nu;
    let cfg = SimConfig { t_start: t, t_end: t + 5.0 * efold, dt: 1e-3 * efold, output_stride: 250, decomposition: true, seed: 0 };
    let rep = two_bubble_experiment(&m, &model, &q, t, lambda0, 0.0, 0.0, &cfg)?;
    let tr = &rep.trajectory;
    o.record("window", tr.truncated.is_none(), format!("{} frames over 5 e-folds, exit {:?}", tr.samples.len(), rep.exit));
    o.below("max relative gap of λ to the reduced law", rep.lambda_gap, 0.1);
    o.record(
        "λ and θ rates within fitted envelopes",
        rep.lambda_rate_constant.is_finite() && rep.theta_rate_constant.is_finite(),
        format!("C_λ = {:.3e}, C_θ = {:.3e}, leading-term mismatch of λ′ {:.3e}", rep.lambda_rate_constant, rep.theta_rate_constant, rep.lambda_rate_relative),
    );
    o.record("|ψ − θ| ≤ C∥g∥²", rep.psi_constant.is_finite(), format!("C = {:.3e}", rep.psi_constant));
    Ok(o)
}

fn c11_shooting(s: &Shared) -> Result<Outcome> {
    let mut o = Outcome::new();
    let model = ReducedModel::new(constants_closed_form(N)?, s.pair.nu, Coupling::Normalized)?;
    let (t, t0) = (-200.0, -15.0);
    let mut own = 0;
    let mut total = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for axis in 0..3 {
        for sign in [-0.5, 0.5] {
            for _ in 0..8 {
                let mut p = [rng.random_range(-0.45..0.45), rng.random_range(-0.45..0.45), rng.random_range(-0.45..0.45)];
                p[axis] = sign;
                let e = reduced_exit(&model, t, t0, p);
                total += 1;
                if e.exit_face.axis() == Some((axis, sign.signum())) && e.exit_offset == 0.0 {
                    own += 1;
                }
            }
        }
    }
    o.record("boundary points exit through their own face", own == total, format!("{own}/{total}"));
    let rep = shoot(|p| reduced_exit(&model, t, t0, p), t, t0, 5, 0.25)?;
    o.record(
        "refined interior point is a strict maximum over its 26 neighbors",
        rep.best_is_strict_max,
        format!("best p = ({:.3e}, {:.3e}, {:.3e}), exit offset {:.3e}", rep.best.p[0], rep.best.p[1], rep.best.p[2], rep.best.exit_offset),
    );
    Ok(o)
}

type Criterion = (usize, &'static str, Duration, fn(&Shared) -> Result<Outcome>);

fn main() {
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let start = Instant::now();
    let base = RadialGrid::build(N, 200.0, 1024, Grading::default()).expect("grid");
    let pair = Arc::new(solve_eigenpair(&base).expect("eigenpair"));
    let shared = Shared { grid: RunConfig::default().grid().expect("grid"), pair };
    let setup = start.elapsed();
    let criteria: [Criterion; 11] = [
        (1, "ground-state residual", Duration::from_secs(5), c1_ground_state),
        (2, "constants", Duration::from_secs(5), c2_constants),
        (3, "spectral", Duration::from_secs(60), c3_spectral),
        (4, "coercivity", Duration::from_secs(120), c4_coercivity),
        (5, "nonlinearity inequalities", Duration::from_secs(30), c5_inequalities),
        (6, "virial cutoff", Duration::from_secs(30), c6_virial),
        (7, "reduced ODE", Duration::from_secs(5), c7_reduced),
        (8, "initial data", Duration::from_secs(30), c8_initial_data),
        (9, "simulator", Duration::from_secs(600), c9_simulator),
        (10, "two-bubble experiment", Duration::from_secs(1800), c10_two_bubble),
        (11, "shooting landscape", Duration::from_secs(7200), c11_shooting),
    ];
    println!("shared setup (grid, eigenpair): {:.2} s", setup.as_secs_f64());
    let mut unexpected = Vec::new();
    for (id, name, budget, f) in criteria {
        if filter.is_some_and(|k| k != id) {
            continue;
        }
        let t = Instant::now();
        let res = f(&shared);
        let el = t.elapsed() + if id == 3 { setup } else { Duration::ZERO };
        let (pass, lines) = match res {
            Ok(o) => (o.pass && el <= budget, o.lines),
            Err(e) => (false, vec![format!("    BAD error: {e}")]),
        };
        let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
        println!(
            "{} criterion {id:>2} {name} ({:.1} s, budget {} s){}",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            budget.as_secs(),
            known.map(|(_, why)| format!(" [known red: {why}]")).unwrap_or_default()
        );
        for l in lines {
            println!("{l}");
        }
        if !pass && known.is_none() {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
