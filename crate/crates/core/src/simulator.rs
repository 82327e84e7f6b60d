//! Time integration of `i∂_t u − Δ²u + |u|^p u = 0` on the radial grid,
//! tracking against the reduced model, and the shooting harness.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::banded::{BandLu, ComplexBand};
use crate::error::{config, Error, Result};
use crate::ground_state::energy;
use crate::modulation::{
    cube_coords, integrate_reduced, BubbleParams, ModulationFrame, Modulator, ReducedModel, ReducedState,
};
use crate::ode::{dopri5, Tolerance};
use crate::radial_core::{RadialField, RadialGrid};
use crate::virial::{corrected_phase, CutoffQ};

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub output_stride: usize,
    pub decomposition: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config("dt", self.dt, "positive finite real"));
        }
        if !(self.t_start < self.t_end) {
            return Err(config("t_end", self.t_end, "real greater than t_start"));
        }
        if self.output_stride == 0 {
            return Err(config("output_stride", 0, "positive integer"));
        }
        Ok(())
    }

    /// Accuracy contract `dt ≤ 0.1·λ_min⁴`.
    pub fn validate_for(&self, lambda_min: f64) -> Result<()> {
        self.validate()?;
        if self.dt > 0.1 * lambda_min.powi(4) {
            return Err(config("dt", self.dt, "at most 0.1*lambda_min^4"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }
}

/// Strang splitting: exact phase rotation and Crank–Nicolson on `Δ²`.
pub struct Stepper {
    grid: Arc<RadialGrid>,
    pub dt: f64,
    lu: BandLu,
}

impl Stepper {
    pub fn new(grid: Arc<RadialGrid>, dt: f64) -> Result<Stepper> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config("dt", dt, "positive finite real"));
        }
        let a = ComplexBand::from_real(grid.bilap_band(), C64::new(0.0, 0.5 * dt), C64::from(1.0));
        let lu = a.factor().map_err(|e| Error::Numerical(format!("Crank-Nicolson factorization: {e}")))?;
        Ok(Stepper { grid, dt, lu })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    fn rotate(&self, v: &mut [C64], h: f64) {
        let p = 8.0 / (self.grid.dim as f64 - 4.0);
        for (z, s) in v.iter_mut().zip(self.grid.sqrt_weights()) {
            let m = z.norm() / s;
            if m > 0.0 {
                *z *= C64::from_polar(1.0, h * m.powf(p));
            }
        }
    }

    /// One step in the symmetric basis `v = √w·u`.
    pub fn step_sym(&self, v: &mut [C64]) {
        self.rotate(v, 0.5 * self.dt);
        let mut y = v.to_vec();
        self.lu.solve_in_place(&mut y);
        let h = C64::new(0.0, 0.5 * self.dt);
        for _ in 0..2 {
            let (bh, bl) = self.grid.bilap_band().matvec_compensated(&y);
            let mut r: Vec<C64> = (0..y.len()).map(|j| (v[j] - y[j]) - h * bh[j] - h * bl[j]).collect();
            self.lu.solve_in_place(&mut r);
            for (a, b) in y.iter_mut().zip(&r) {
                *a += b;
            }
        }
        for (x, y) in v.iter_mut().zip(&y) {
            *x = 2.0 * y - *x;
        }
        self.rotate(v, 0.5 * self.dt);
    }

    pub fn step(&self, u: &RadialField) -> RadialField {
        let mut v = self.grid.to_sym(&u.values);
        self.step_sym(&mut v);
        RadialField::new(self.grid.clone(), self.grid.from_sym(&v))
    }

    pub fn advance(&self, u: &RadialField, steps: usize) -> RadialField {
        let mut v = self.grid.to_sym(&u.values);
        for _ in 0..steps {
            self.step_sym(&mut v);
        }
        RadialField::new(self.grid.clone(), self.grid.from_sym(&v))
    }
}

/// One step of size `dt`.
pub fn step(u: &RadialField, dt: f64) -> Result<RadialField> {
    Ok(Stepper::new(u.grid.clone(), dt)?.step(u))
}

pub fn mass(u: &RadialField) -> f64 {
    u.norm().powi(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajSample {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub params: Option<BubbleParams>,
    pub g_norm: f64,
    pub a: [f64; 4],
    pub psi: f64,
    pub k: f64,
    /// `(ζ′, μ′, θ′, λ′)` from the rate system
    pub rates: Option<[f64; 4]>,
    pub decompose_residual: f64,
}

impl TrajSample {
    pub const CSV_HEADER: [&'static str; 13] =
        ["t", "lambda", "theta", "zeta", "mu", "g_norm", "a1p", "a1m", "a2p", "a2m", "E", "mass", "psi"];

    pub fn csv_row(&self) -> [f64; 13] {
        let p = self.params.map(|p| p.as_array()).unwrap_or([f64::NAN; 4]);
        [self.t, p[3], p[2], p[0], p[1], self.g_norm, self.a[0], self.a[1], self.a[2], self.a[3], self.energy, self.mass, self.psi]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajSample>,
    pub truncated: Option<String>,
    pub steps: usize,
    #[serde(skip)]
    pub last: Option<RadialField>,
}

/// Decomposition context for [`run`].
pub struct Tracking<'a> {
    pub modulator: &'a Modulator,
    pub guess: BubbleParams,
    pub q: Option<&'a CutoffQ>,
    pub w_mass: f64,
    pub rates: bool,
}

fn sample_of(t: f64, u: &RadialField, frame: Option<(&ModulationFrame, f64)>, tr: Option<&Tracking>) -> Result<TrajSample> {
    let e = energy(u).value;
    let m = mass(u);
    let mut s = TrajSample {
        t,
        energy: e,
        mass: m,
        params: None,
        g_norm: f64::NAN,
        a: [f64::NAN; 4],
        psi: f64::NAN,
        k: f64::NAN,
        rates: None,
        decompose_residual: f64::NAN,
    };
    if let (Some((f, res)), Some(tr)) = (frame, tr) {
        s.params = Some(f.params);
        s.g_norm = f.g_norm;
        s.a = [f.a1_plus, f.a1_minus, f.a2_plus, f.a2_minus];
        s.decompose_residual = res;
        if let Some(q) = tr.q {
            s.psi = corrected_phase(q, f.params.theta, f.params.lambda, &f.g, tr.w_mass);
        }
        s.k = tr.modulator.k_term(f);
        if tr.rates {
            let r = tr.modulator.modulation_rates(f, &tr.modulator.structured_du_dt(f))?;
            s.rates = Some(r.rates);
        }
    }
    Ok(s)
}

/// Integrates from `u0` and records a sample every `output_stride` steps.
pub fn run(u0: &RadialField, cfg: &SimConfig, tracking: Option<Tracking>) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = u0.grid.clone();
    let stepper = Stepper::new(grid.clone(), cfg.dt)?;
    let nsteps = cfg.steps();
    let mut v = grid.to_sym(&u0.values);
    let mut samples = Vec::new();
    let mut guess = tracking.as_ref().map(|t| t.guess);
    let mut truncated = None;
    let track = if cfg.decomposition { tracking.as_ref() } else { None };
    let mut k = 0;
    loop {
        let t = cfg.t_start + k as f64 * cfg.dt;
        if k % cfg.output_stride == 0 || k == nsteps {
            let u = RadialField::new(grid.clone(), grid.from_sym(&v));
            if !u.is_finite() {
                truncated = Some(format!("non-finite field at t = {t:e}"));
                break;
            }
            let frame = match track {
                Some(tr) => match tr.modulator.decompose(&u, guess.unwrap(), t) {
                    Ok((f, info)) => {
                        guess = Some(f.params);
                        Some((f, info.residual))
                    }
                    Err(e) => {
                        truncated = Some(format!("decomposition failed at t = {t:e}: {e}"));
                        samples.push(sample_of(t, &u, None, None)?);
                        break;
                    }
                },
                None => None,
            };
            samples.push(sample_of(t, &u, frame.as_ref().map(|(f, r)| (f, *r)), track)?);
        }
        if k == nsteps {
            break;
        }
        stepper.step_sym(&mut v);
        k += 1;
    }
    let last = Some(RadialField::new(grid.clone(), grid.from_sym(&v)));
    Ok(Trajectory { samples, truncated, steps: k, last })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Counts of per-sample relative energy changes by decade, from `1e-16` up.
    pub energy_histogram: Vec<(f64, usize)>,
}

pub fn conservation_audit(traj: &Trajectory) -> ConservationReport {
    let s = &traj.samples;
    if s.is_empty() {
        return ConservationReport { mass_drift: 0.0, energy_drift: 0.0, energy_histogram: vec![] };
    }
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    let (m0, e0) = (s[0].mass, s[0].energy);
    let mass_drift = s.iter().map(|x| rel(x.mass, m0)).fold(0.0, f64::max);
    let energy_drift = s.iter().map(|x| rel(x.energy, e0)).fold(0.0, f64::max);
    let mut hist: Vec<(f64, usize)> = (0..17).map(|k| (10f64.powi(k - 16), 0)).collect();
    for w in s.windows(2) {
        let d = rel(w[1].energy, w[0].energy);
        let idx = hist.iter().position(|(b, _)| d <= *b).unwrap_or(hist.len() - 1);
        hist[idx].1 += 1;
    }
    ConservationReport { mass_drift, energy_drift, energy_histogram: hist }
}

/// Largest `|u|^p`, which sets the stiff time scale of the phase rotation.
pub fn max_potential(u: &RadialField) -> f64 {
    let p = 8.0 / (u.grid.dim as f64 - 4.0);
    u.values.iter().map(|z| z.norm().powf(p)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub t_start: f64,
    pub lambda0: f64,
    pub dt: f64,
    pub trajectory: Trajectory,
    pub reduced: Vec<ReducedState>,
    /// `max |λ − λ_reduced|/λ_reduced`
    pub lambda_gap: f64,
    /// Fitted constants `c` with `residual ≤ c·envelope` for the λ and θ laws.
    pub lambda_rate_constant: f64,
    pub theta_rate_constant: f64,
    /// `max |λ′ − k_λλ^{(N−10)/2}|/(k_λλ^{(N−10)/2})`
    pub lambda_rate_relative: f64,
    /// `max |ψ − θ|/∥g∥²_E`
    pub psi_constant: f64,
    pub unstable_growth: Option<f64>,
    pub exit: Option<String>,
}

/// Runs `u(T) = −iW + W_{λ⁰} + g⁰` with tracking and compares with the reduced law.
#[allow(clippy::too_many_arguments)]
pub fn two_bubble_experiment(
    modulator: &Modulator,
    model: &ReducedModel,
    q: &CutoffQ,
    t: f64,
    lambda0: f64,
    a1_0: f64,
    a2_0: f64,
    cfg: &SimConfig,
) -> Result<ExperimentReport> {
    let id = modulator.initial_data(model, t, lambda0, a1_0, a2_0)?;
    let p0 = BubbleParams::canonical(lambda0);
    let u0 = modulator.ansatz(&p0).add(&id.g0);
    let mut cfg = cfg.clone();
    cfg.t_start = t;
    cfg.validate_for(lambda0)?;
    let tracking = Tracking { modulator, guess: p0, q: Some(q), w_mass: model.constants.w_mass, rates: true };
    let traj = run(&u0, &cfg, Some(tracking))?;
    let frames: Vec<&TrajSample> = traj.samples.iter().filter(|s| s.params.is_some()).collect();
    if frames.is_empty() {
        return Err(Error::Decomposition { iterations: 0, residual: f64::NAN });
    }
    let f0 = frames[0];
    let s0 = ReducedState {
        t: f0.t,
        params: f0.params.unwrap(),
        a1_plus: f0.a[0],
        a1_minus: f0.a[1],
        a2_plus: f0.a[2],
        a2_minus: f0.a[3],
        k_forcing: 0.0,
    };
    let outs: Vec<f64> = frames.iter().map(|s| s.t).collect();
    let red = integrate_reduced(model, &s0, &outs, Tolerance::default())?;
    let nf = model.constants.n as f64;
    let fac = model.factor();
    let mut lambda_gap = 0.0f64;
    let mut lc = 0.0f64;
    let mut tc = 0.0f64;
    let mut lrel = 0.0f64;
    let mut psi_c = 0.0f64;
    for (s, r) in frames.iter().zip(&red.states) {
        let p = s.params.unwrap();
        lambda_gap = lambda_gap.max((p.lambda - r.params.lambda).abs() / r.params.lambda);
        if let Some(rates) = s.rates {
            let tau = model.tau(s.t).abs();
            let lead = model.k_lambda() * p.lambda.powf((nf - 10.0) / 2.0);
            let res_l = (rates[3] - lead).abs() / fac;
            lc = lc.max(res_l / tau.powf(-(2.0 * nf - 19.0) / (2.0 * (nf - 12.0))));
            lrel = lrel.max((rates[3] - lead).abs() / lead);
            let th = rates[2] + model.k_theta() * p.theta * p.lambda.powf((nf - 12.0) / 2.0)
                - s.k / (2.0 * p.lambda.powi(4) * model.constants.w_mass);
            tc = tc.max(th.abs() / fac / tau.powf(-(nf - 11.0) / (nf - 12.0)));
        }
        if s.g_norm > 0.0 && s.psi.is_finite() {
            psi_c = psi_c.max((s.psi - p.theta).abs() / (s.g_norm * s.g_norm));
        }
    }
    let unstable_growth = if frames.len() >= 2 {
        let a = frames[0].a[2];
        let b = frames[frames.len() - 1].a[2];
        (a != 0.0).then(|| (b / a).abs().ln())
    } else {
        None
    };
    Ok(ExperimentReport {
        t_start: t,
        lambda0,
        dt: cfg.dt,
        exit: traj.truncated.clone(),
        trajectory: traj,
        reduced: red.states,
        lambda_gap,
        lambda_rate_constant: lc,
        theta_rate_constant: tc,
        lambda_rate_relative: lrel,
        psi_constant: psi_c,
        unstable_growth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Face {
    P0Plus,
    P0Minus,
    P1Plus,
    P1Minus,
    P2Plus,
    P2Minus,
    None,
}

impl Face {
    pub fn as_str(&self) -> &'static str {
        match self {
            Face::P0Plus => "+p0",
            Face::P0Minus => "-p0",
            Face::P1Plus => "+p1",
            Face::P1Minus => "-p1",
            Face::P2Plus => "+p2",
            Face::P2Minus => "-p2",
            Face::None => "none",
        }
    }

    fn of(p: &[f64; 3]) -> Face {
        let (k, v) = p
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bk, bv), (k, v)| if v.abs() > bv.abs() { (k, *v) } else { (bk, bv) });
        if v.abs() < 0.5 {
            return Face::None;
        }
        match (k, v > 0.0) {
            (0, true) => Face::P0Plus,
            (0, false) => Face::P0Minus,
            (1, true) => Face::P1Plus,
            (1, false) => Face::P1Minus,
            (2, true) => Face::P2Plus,
            _ => Face::P2Minus,
        }
    }

    /// Coordinate index and sign.
    pub fn axis(&self) -> Option<(usize, f64)> {
        match self {
            Face::P0Plus => Some((0, 1.0)),
            Face::P0Minus => Some((0, -1.0)),
            Face::P1Plus => Some((1, 1.0)),
            Face::P1Minus => Some((1, -1.0)),
            Face::P2Plus => Some((2, 1.0)),
            Face::P2Minus => Some((2, -1.0)),
            Face::None => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootPoint {
    pub p: [f64; 3],
    /// Time elapsed since `T` at exit (or at `T0` without exit).
    pub exit_offset: f64,
    pub exit_time: f64,
    pub exit_face: Face,
}

/// Exit of the reduced cube dynamics started from `p` at `T`.
pub fn reduced_exit(model: &ReducedModel, t: f64, t0: f64, p: [f64; 3]) -> ShootPoint {
    let face0 = if p.iter().any(|v| v.abs() >= 0.5) { Face::of(&p) } else { Face::None };
    if face0 != Face::None {
        return ShootPoint { p, exit_offset: 0.0, exit_time: t, exit_face: face0 };
    }
    let s0 = model.state_from_cube(t, p);
    let y0 = [s0.params.lambda, 0.0, s0.a1_plus, 0.0, s0.a2_plus, 0.0];
    let mu = 1.0;
    let faces = [Face::P0Plus, Face::P0Minus, Face::P1Plus, Face::P1Minus, Face::P2Plus, Face::P2Minus];
    let run = dopri5(
        |_, y| model.rhs(y, mu, 0.0),
        0.0,
        &y0,
        &[t0 - t],
        Tolerance { rtol: 1e-10, atol: 1e-300 },
        |s, y| {
            let f = Face::of(&cube_coords(model, t + s, y[0], y[2], y[4]));
            (f != Face::None).then(|| format!("{} {s:e}", faces.iter().position(|x| *x == f).unwrap()))
        },
    );
    match run.stopped.as_deref().and_then(|r| r.split_once(' ')) {
        Some((k, s)) => {
            let s: f64 = s.parse().unwrap_or(f64::NAN);
            let face = k.parse::<usize>().ok().and_then(|k| faces.get(k).copied()).unwrap_or(Face::None);
            if face == Face::None {
                return ShootPoint { p, exit_offset: f64::NAN, exit_time: f64::NAN, exit_face: Face::None };
            }
            ShootPoint { p, exit_offset: s, exit_time: t + s, exit_face: face }
        }
        None => ShootPoint { p, exit_offset: t0 - t, exit_time: t0, exit_face: Face::None },
    }
}

/// Exit of the PDE started from the cube point `p`; the unstable directions
/// are measured in units of `amplitude` (|a| = amplitude on the faces).
pub struct PdeProbe<'a> {
    pub modulator: &'a Modulator,
    pub model: &'a ReducedModel,
    pub lambda0: f64,
    pub amplitude: f64,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
}

impl PdeProbe<'_> {
    pub fn exit(&self, p: [f64; 3]) -> Result<ShootPoint> {
        let t = self.model.time_of_lambda(self.lambda0);
        let a1 = 2.0 * p[1] * self.amplitude;
        let a2 = 2.0 * p[2] * self.amplitude;
        let id = self.modulator.initial_data(self.model, t, self.lambda0, a1, a2)?;
        let p0 = BubbleParams::canonical(self.lambda0);
        let u0 = self.modulator.ansatz(&p0).add(&id.g0);
        let face0 = if p[1].abs() >= 0.5 || p[2].abs() >= 0.5 { Face::of(&[0.0, p[1], p[2]]) } else { Face::None };
        if face0 != Face::None {
            return Ok(ShootPoint { p, exit_offset: 0.0, exit_time: t, exit_face: face0 });
        }
        let stepper = Stepper::new(self.modulator.grid.clone(), self.dt)?;
        let grid = &self.modulator.grid;
        let mut v = grid.to_sym(&u0.values);
        let mut guess = p0;
        let nsteps = (self.horizon / self.dt).round() as usize;
        let mut k = 0;
        while k < nsteps {
            for _ in 0..self.stride {
                stepper.step_sym(&mut v);
            }
            k += self.stride;
            let u = RadialField::new(grid.clone(), grid.from_sym(&v));
            let s = k as f64 * self.dt;
            let (f, _) = self.modulator.decompose(&u, guess, t + s)?;
            guess = f.params;
            let q = [0.0, f.a1_plus / (2.0 * self.amplitude), f.a2_plus / (2.0 * self.amplitude)];
            let face = Face::of(&q);
            if face != Face::None {
                return Ok(ShootPoint { p, exit_offset: s, exit_time: t + s, exit_face: face });
            }
        }
        Ok(ShootPoint { p, exit_offset: nsteps as f64 * self.dt, exit_time: t + nsteps as f64 * self.dt, exit_face: Face::None })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShootReport {
    pub t: f64,
    pub t0: f64,
    pub landscape: Vec<ShootPoint>,
    pub best: ShootPoint,
    /// Exit points on the 3³ probe grid around `best`.
    pub neighborhood: Vec<ShootPoint>,
    pub best_is_strict_max: bool,
    pub probe_spacing: f64,
}

/// Bisection on the exit-face sign of coordinate `k` along a segment.
fn bisect<F: Fn([f64; 3]) -> ShootPoint>(exit: &F, mut p: [f64; 3], k: usize, iters: usize) -> [f64; 3] {
    let (mut lo, mut hi) = (-0.5, 0.5);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        p[k] = mid;
        let e = exit(p);
        match e.exit_face.axis() {
            Some((kk, s)) if kk == k => {
                if s > 0.0 {
                    hi = mid
                } else {
                    lo = mid
                }
            }
            _ => break,
        }
    }
    p[k] = 0.5 * (lo + hi);
    p
}

/// Exit landscape over a `res³` grid of `Q`, nested bisection on `(p₁, p₂)` for
/// each `p₀` slice, and the strict-maximum check on the 3³ neighborhood.
pub fn shoot<F>(exit: F, t: f64, t0: f64, res: usize, probe_spacing: f64) -> Result<ShootReport>
where
    F: Fn([f64; 3]) -> ShootPoint + Sync,
{
    if !(t < t0 && t0 < 0.0) {
        return Err(config("T0", t0, "negative real later than T"));
    }
    if res < 2 {
        return Err(config("resolution", res, "integer >= 2"));
    }
    let axis: Vec<f64> = (0..res).map(|i| -0.5 + i as f64 / (res - 1) as f64).collect();
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(res * res * res);
    for a in &axis {
        for b in &axis {
            for c in &axis {
                pts.push([*a, *b, *c]);
            }
        }
    }
    let landscape: Vec<ShootPoint> = pts.par_iter().map(|p| exit(*p)).collect();
    if landscape.iter().all(|e| e.exit_offset == 0.0) {
        return Err(Error::Regime("every cube point exits at T; start deeper".into()));
    }
    let slices: Vec<f64> = axis.iter().copied().filter(|a| a.abs() < 0.5).collect();
    let candidates: Vec<ShootPoint> = slices
        .par_iter()
        .map(|p0| {
            let mut p = [*p0, 0.0, 0.0];
            for _ in 0..3 {
                p = bisect(&exit, p, 2, 60);
                p = bisect(&exit, p, 1, 60);
            }
            exit(p)
        })
        .collect();
    let best = *candidates
        .iter()
        .max_by(|a, b| a.exit_offset.partial_cmp(&b.exit_offset).unwrap())
        .ok_or_else(|| Error::Regime("no interior slice".into()))?;
    let mut neigh = Vec::new();
    for d0 in [-1.0, 0.0, 1.0] {
        for d1 in [-1.0, 0.0, 1.0] {
            for d2 in [-1.0, 0.0, 1.0] {
                if d0 == 0.0 && d1 == 0.0 && d2 == 0.0 {
                    continue;
                }
                neigh.push([best.p[0] + d0 * probe_spacing, best.p[1] + d1 * probe_spacing, best.p[2] + d2 * probe_spacing]);
            }
        }
    }
    let neighborhood: Vec<ShootPoint> = neigh.par_iter().map(|p| exit(*p)).collect();
    let strict = neighborhood.iter().all(|e| e.exit_offset < best.exit_offset);
    Ok(ShootReport { t, t0, landscape, best, neighborhood, best_is_strict_max: strict, probe_spacing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::Grading;

    #[test]
    fn crank_nicolson_is_unitary() {
        let g = RadialGrid::build(13, 50.0, 256, Grading::default()).unwrap();
        let u = RadialField::from_fn(g.clone(), |r| C64::new((-r * r).exp(), 0.2 * r * (-r * r).exp()));
        let s = Stepper::new(g, 1e-3).unwrap();
        let v = s.advance(&u, 10);
        assert!((mass(&v) / mass(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn face_of_boundary() {
        assert_eq!(Face::of(&[0.0, 0.5, 0.1]), Face::P1Plus);
        assert_eq!(Face::of(&[0.0, 0.1, -0.2]), Face::None);
    }
}
