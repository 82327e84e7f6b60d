//! Run configuration, the check registry and the subcommand drivers shared by
//! the `twobubble` binary and the C interface.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::ground_state::{constants_closed_form, constants_compute, w_field, w_real, Constants};
use crate::linearized::{alpha_project, coercivity_min_eig, solve_eigenpair, EigenPair, FormId, LinOps};
use crate::modulation::{closed_form_residual, integrate_reduced, BubbleParams, Coupling, Modulator, ReducedModel, ReducedState};
use crate::nonlinearity::{lemma21_check, InequalityId};
use crate::ode::Tolerance;
use crate::radial_core::{Grading, RadialField, RadialGrid};
use crate::simulator::{conservation_audit, reduced_exit, run, shoot, two_bubble_experiment, PdeProbe, ShootPoint, SimConfig, Stepper, TrajSample};
use crate::virial::build_q;

pub const FORMAT: &str = "twobubble/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Reduced,
    Pde,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub n_nodes: usize,
    pub r_max: f64,
    pub eigen_nodes: usize,
    pub seed: u64,
    pub rtol: f64,
    pub samples: usize,
    pub tamper_c_tilde: f64,
    pub t0: f64,
    pub t1: f64,
    pub theta0: f64,
    pub a1p0: f64,
    pub a2p0: f64,
    pub forcing: f64,
    pub ode_samples: usize,
    pub coupling: Coupling,
    pub lambda0: f64,
    pub efolds: f64,
    pub dt_factor: f64,
    pub stride: usize,
    pub a1: f64,
    pub a2: f64,
    pub sim_nodes: usize,
    pub virial_c: f64,
    pub virial_r: f64,
    pub shoot_t: f64,
    pub shoot_t0: f64,
    pub resolution: usize,
    pub spacing: f64,
    pub backend: Backend,
    pub probe_amplitude: f64,
    pub probe_efolds: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 13,
            n_nodes: 2048,
            r_max: 200.0,
            eigen_nodes: 1024,
            seed: 0,
            rtol: 1e-10,
            samples: 20_000,
            tamper_c_tilde: 0.0,
            t0: -1e4,
            t1: -1e2,
            theta0: 0.0,
            a1p0: 0.0,
            a2p0: 0.0,
            forcing: 0.0,
            ode_samples: 200,
            coupling: Coupling::Normalized,
            lambda0: 0.05,
            efolds: 5.0,
            dt_factor: 1e-3,
            stride: 250,
            a1: 0.0,
            a2: 0.0,
            sim_nodes: 4096,
            virial_c: 0.1,
            virial_r: 5.0,
            shoot_t: -200.0,
            shoot_t0: -15.0,
            resolution: 5,
            spacing: 0.25,
            backend: Backend::Reduced,
            probe_amplitude: 100.0,
            probe_efolds: 10.0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str, expected: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config(key, v, expected))
}

fn pos(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config(key, v, "positive finite real"))
    }
}

fn fin(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config(key, v, "finite real"))
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 32] = [
        "N", "n_nodes", "r_max", "eigen_nodes", "seed", "rtol", "samples", "tamper_c_tilde", "t0", "t1", "theta0", "a1p0", "a2p0",
        "forcing", "ode_samples", "coupling", "lambda0", "efolds", "dt_factor", "stride", "a1", "a2", "sim_nodes", "virial_c",
        "virial_r", "shoot_t", "shoot_t0", "resolution", "spacing", "backend", "probe_amplitude", "probe_efolds",
    ];

    /// Sets one key; unknown keys and out-of-domain values are errors.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let real = |e: &str| -> Result<f64> { num::<f64>(key, v, e) };
        match key {
            "N" => {
                let n: usize = num(key, v, "integer >= 5")?;
                if n < 5 {
                    return Err(config(key, v, "integer >= 5"));
                }
                self.n = n;
            }
            "n_nodes" => self.n_nodes = num(key, v, "integer >= 64")?,
            "r_max" => self.r_max = pos(key, real("positive real")?)?,
            "eigen_nodes" => self.eigen_nodes = num(key, v, "integer >= 64")?,
            "seed" => self.seed = num(key, v, "unsigned 64-bit integer")?,
            "rtol" => self.rtol = pos(key, real("positive real")?)?,
            "samples" => self.samples = num(key, v, "positive integer")?,
            "tamper_c_tilde" => self.tamper_c_tilde = fin(key, real("finite real")?)?,
            "t0" => self.t0 = fin(key, real("negative real")?)?,
            "t1" => self.t1 = fin(key, real("negative real")?)?,
            "theta0" => self.theta0 = fin(key, real("finite real")?)?,
            "a1p0" => self.a1p0 = fin(key, real("finite real")?)?,
            "a2p0" => self.a2p0 = fin(key, real("finite real")?)?,
            "forcing" => self.forcing = fin(key, real("finite real")?)?,
            "ode_samples" => self.ode_samples = num(key, v, "positive integer")?,
            "coupling" => {
                self.coupling = match v.trim() {
                    "normalized" => Coupling::Normalized,
                    "amplitude" => Coupling::Amplitude,
                    _ => return Err(config(key, v, "normalized or amplitude")),
                }
            }
            "lambda0" => self.lambda0 = pos(key, real("real in (0, 0.2]")?)?,
            "efolds" => self.efolds = pos(key, real("positive real")?)?,
            "dt_factor" => self.dt_factor = pos(key, real("positive real")?)?,
            "stride" => self.stride = num(key, v, "positive integer")?,
            "a1" => self.a1 = fin(key, real("finite real")?)?,
            "a2" => self.a2 = fin(key, real("finite real")?)?,
            "sim_nodes" => self.sim_nodes = num(key, v, "integer >= 64")?,
            "virial_c" => self.virial_c = pos(key, real("real in (0, 1)")?)?,
            "virial_r" => self.virial_r = pos(key, real("positive real")?)?,
            "shoot_t" => self.shoot_t = fin(key, real("negative real")?)?,
            "shoot_t0" => self.shoot_t0 = fin(key, real("negative real")?)?,
            "resolution" => self.resolution = num(key, v, "integer >= 2")?,
            "spacing" => self.spacing = pos(key, real("positive real")?)?,
            "backend" => {
                self.backend = match v.trim() {
                    "reduced" => Backend::Reduced,
                    "pde" => Backend::Pde,
                    _ => return Err(config(key, v, "reduced or pde")),
                }
            }
            "probe_amplitude" => self.probe_amplitude = pos(key, real("positive real")?)?,
            "probe_efolds" => self.probe_efolds = pos(key, real("positive real")?)?,
            _ => return Err(config(key, v, "a known configuration key")),
        }
        Ok(())
    }

    /// Requirements of the two-bubble regime, used by `ode`, `simulate` and `shoot`.
    pub fn require_regime(&self) -> Result<()> {
        if self.n < 13 {
            return Err(config("N", self.n, "integer >= 13 for the two-bubble regime"));
        }
        Ok(())
    }

    /// `key=value` pairs in key order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = Vec::new();
        if let serde_json::Value::Object(m) = v {
            for k in Self::KEYS {
                let s = match &m[k] {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push((k.to_string(), s));
            }
        }
        out
    }

    pub fn header_line(&self) -> String {
        let body: Vec<String> = self.entries().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {FORMAT} {}", body.join(" "))
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::build(self.n, self.r_max, self.n_nodes, Grading::default())
    }
}

/// Parses flat `key=value` text with `#` comments on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_onto(RunConfig::default(), text)
}

pub fn parse_config_onto(mut cfg: RunConfig, text: &str) -> Result<RunConfig> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| config(&format!("line {}", i + 1), line, "key=value"))?;
        let k = k.trim();
        if let Some(first) = seen.insert(k.to_string(), i + 1) {
            return Err(Error::Config {
                param: k.to_string(),
                value: format!("duplicate at lines {first} and {}", i + 1),
                expected: "a single occurrence".into(),
            });
        }
        cfg.set(k, v.trim())?;
    }
    Ok(cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub paper_ref: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

fn rec(id: &str, paper_ref: &str, pass: bool, measured: f64, tolerance: f64) -> CheckRecord {
    CheckRecord { id: id.into(), paper_ref: paper_ref.into(), pass, measured, tolerance }
}

fn below(id: &str, paper_ref: &str, measured: f64, tolerance: f64) -> CheckRecord {
    rec(id, paper_ref, measured < tolerance, measured, tolerance)
}

pub const MODULES: [&str; 7] = ["radial_core", "ground_state", "nonlinearity", "linearized", "virial", "modulation", "simulator"];

/// Shared, lazily built state for the checks.
pub struct Context {
    pub cfg: RunConfig,
    grid: OnceLock<Arc<RadialGrid>>,
    pair: OnceLock<Arc<EigenPair>>,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Context {
        Context { cfg, grid: OnceLock::new(), pair: OnceLock::new() }
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        if let Some(g) = self.grid.get() {
            return Ok(g.clone());
        }
        let g = self.cfg.grid()?;
        Ok(self.grid.get_or_init(|| g).clone())
    }

    pub fn pair(&self) -> Result<Arc<EigenPair>> {
        if let Some(p) = self.pair.get() {
            return Ok(p.clone());
        }
        let ge = RadialGrid::build(self.cfg.n, self.cfg.r_max, self.cfg.eigen_nodes, Grading::default())?;
        let p = Arc::new(solve_eigenpair(&ge)?);
        Ok(self.pair.get_or_init(|| p).clone())
    }

    pub fn model(&self, coupling: Coupling) -> Result<ReducedModel> {
        let c = constants_closed_form(self.cfg.n)?;
        ReducedModel::new(c, self.pair()?.nu, coupling)
    }
}

/// Largest relative residual of `Δ²W = W^{(N+4)/(N−4)}` on `[r_lo, r_hi]`.
pub fn w_residual(grid: &RadialGrid, r_lo: f64, r_hi: f64) -> Result<f64> {
    let w = w_real(grid, 1.0)?;
    let b = grid.bilaplacian(&w);
    let nf = grid.dim as f64;
    let e = (nf + 4.0) / (nf - 4.0);
    Ok(grid
        .nodes()
        .iter()
        .zip(w.iter().zip(&b))
        .filter(|(r, _)| **r >= r_lo && **r <= r_hi)
        .map(|(_, (w, b))| (b - w.powf(e)).abs() / w.powf(e))
        .fold(0.0, f64::max))
}

fn check_radial_core(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let g = ctx.grid()?;
    Ok(vec![
        below("radial_core.w_residual", "ground-state profile equation on [0.01, 50]", w_residual(&g, 0.01, 50.0)?, 1e-5),
        below("radial_core.bilap_symmetry", "self-adjointness of the radial bilaplacian", g.bilap_band().asymmetry(), 1e-10),
    ])
}

fn check_ground_state(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let g = ctx.grid()?;
    let rep = constants_compute(ctx.cfg.n, &g)?;
    let mut out: Vec<CheckRecord> = rep
        .checks
        .iter()
        .map(|c| below(&format!("ground_state.{}", c.name), "Beta-function closed form of the ground-state integrals", c.rel_err, 1e-8))
        .collect();
    out.push(below("ground_state.energy_identity", "E(W) = (2/N)∫|ΔW|²", rep.energy_identity, 1e-8));
    if ctx.cfg.n > 12 {
        let mut c: Constants = rep.constants.clone();
        c.c_tilde *= 1.0 + ctx.cfg.tamper_c_tilde;
        out.push(below("ground_state.c_tilde", "leading-order balance fixing the blow-up constant", crate::ground_state::c_tilde_residual(&c), 1e-10));
    }
    Ok(out)
}

fn check_nonlinearity(ctx: &Context) -> Result<Vec<CheckRecord>> {
    InequalityId::ALL
        .iter()
        .map(|id| {
            let r = lemma21_check(*id, ctx.cfg.samples, ctx.cfg.seed, ctx.cfg.n)?;
            Ok(rec(
                &format!("nonlinearity.{id}"),
                "pointwise bounds on the power nonlinearity",
                r.fitted_constant.is_finite(),
                r.fitted_constant,
                f64::MAX,
            ))
        })
        .collect()
}

fn check_linearized(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let pair = ctx.pair()?;
    let s = pair.summary();
    let ops = LinOps::new(pair.grid().clone());
    let (km, kp) = ops.kernel_residuals();
    let mut out = vec![
        rec("linearized.nu", "positive eigenvalue of the linearized flow", s.nu > 0.0, s.nu, 0.0),
        below("linearized.residual_plus", "eigenpair equation for Y1", s.residual_plus, 1e-6),
        below("linearized.residual_minus", "eigenpair equation for Y2", s.residual_minus, 1e-6),
        rec("linearized.y1_y2", "sign normalization of the eigenpair", s.y1_dot_y2 > 0.0, s.y1_dot_y2, 0.0),
        below("linearized.w_y1", "orthogonality of W and Y1", s.w_dot_y1.abs(), 1e-6),
        below("linearized.lw_y2", "orthogonality of ΛW and Y2", s.lw_dot_y2.abs(), 1e-6),
        below("linearized.kernel_minus", "L⁻W = 0", km, 1e-5),
        below("linearized.kernel_plus", "L⁺ΛW = 0", kp, 1e-5),
    ];
    for form in [FormId::LPlus, FormId::LMinus] {
        let r = coercivity_min_eig(form, pair.grid(), &pair)?;
        out.push(rec(
            &format!("linearized.coercivity.{}", if form == FormId::LPlus { "plus" } else { "minus" }),
            "coercivity of the linearized energy on the orthogonal complement",
            r.min_eigenvalue_projected > 0.0,
            r.min_eigenvalue_projected,
            0.0,
        ));
    }
    Ok(out)
}

fn check_virial(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for r in [1.0, 5.0, 10.0] {
        let q = build_q(ctx.cfg.n, ctx.cfg.virial_c, r)?;
        for p in q.properties() {
            let ratio = if p.bound > 0.0 { p.worst / p.bound } else { p.worst };
            out.push(rec(
                &format!("virial.R{r}.{}", p.name),
                "properties of the localized virial weight",
                p.pass,
                ratio,
                if p.bound > 0.0 { 1.0 } else { 0.0 },
            ));
        }
    }
    Ok(out)
}

fn check_modulation(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let model = ctx.model(Coupling::Normalized)?;
    let ts: Vec<f64> = (0..50).map(|i| -1e4 * 10f64.powf(-2.0 * i as f64 / 49.0)).collect();
    let res = closed_form_residual(&model, &ts);
    let mut out = vec![below("modulation.closed_form", "closed-form blow-up law solves the leading modulation equation", res, 1e-10)];
    if ctx.cfg.n == 13 {
        let ratio = model.lambda_cf(-100.0) / model.lambda_cf(-200.0);
        out.push(below("modulation.exponent", "λ(t)/λ(2t) = 4 for N = 13", (ratio - 4.0).abs(), 1e-6));
    }
    let g = ctx.grid()?;
    let m = Modulator::new(g.clone(), ctx.pair()?);
    let p = BubbleParams::new(-1.5607963, 1.02, 0.005, 0.04)?;
    let (f, _) = m.decompose(&m.ansatz(&p), BubbleParams::canonical(0.05), 0.0)?;
    let err = (f.params.zeta - p.zeta).abs().max((f.params.mu - p.mu).abs()).max((f.params.theta - p.theta).abs()).max((f.params.lambda - p.lambda).abs());
    out.push(below("modulation.decompose", "modulation parameters of an exact two-bubble profile", err, 1e-8));
    let t = -100.0;
    let lam0 = model.lambda_cf(t);
    let gi = RadialGrid::build(ctx.cfg.n, ctx.cfg.r_max, 4 * ctx.cfg.n_nodes, Grading::Tangent { scale: lam0.sqrt() })?;
    let mi = Modulator::new(gi, ctx.pair()?);
    let env = 0.5 * (-t).powf(-(2.0 * ctx.cfg.n as f64 - 13.0) / (2.0 * (ctx.cfg.n as f64 - 12.0)));
    let id = mi.initial_data(&model, t, lam0, env, env)?;
    out.push(below("modulation.initial_dominance", "diagonal dominance of the initial-data system", id.dominance, 1.0));
    let orth = id.orthogonality.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    out.push(below("modulation.initial_orthogonality", "orthogonality of the initial correction", orth, 1e-8));
    Ok(out)
}

fn check_simulator(ctx: &Context) -> Result<Vec<CheckRecord>> {
    let g = ctx.grid()?;
    let pair = ctx.pair()?;
    let w = w_field(&g, 1.0)?;
    let pulse = RadialField::from_fn(g.clone(), |r| C64::new(1.0, 0.5 * r) * (-r * r / 4.0).exp());
    let one = Stepper::new(g.clone(), 1e-4)?.step(&pulse);
    let dm = (one.norm().powi(2) / pulse.norm().powi(2) - 1.0).abs();
    let ws = Stepper::new(g.clone(), 1e-7)?.step(&w);
    let ds = ws.sub(&w).norm() / w.norm();
    let zero = RadialField::zeros(g.clone());
    let cfg = SimConfig { t_start: 0.0, t_end: 1e-3, dt: 1e-4, output_stride: 1, decomposition: false, seed: ctx.cfg.seed };
    let z = conservation_audit(&run(&zero, &cfg, None)?);
    let (y1, y2) = pair.y_on(&g, 1.0);
    let y = RadialField::new(g.clone(), y1.iter().zip(&y2).map(|(a, b)| C64::new(*b, *a)).collect());
    let up = w.add(&y.scale(C64::from(1e-6 * w.norm() / y.norm())));
    let dt = 1e-6;
    let steps = (0.5 / pair.nu / dt).round() as usize;
    let st = Stepper::new(g.clone(), dt)?;
    let (a0, _) = alpha_project(&pair, 0.0, 1.0, &up.sub(&w));
    let (a1, _) = alpha_project(&pair, 0.0, 1.0, &st.advance(&up, steps).sub(&st.advance(&w, steps)));
    let rate = (a1 / a0).ln() / (steps as f64 * dt) / pair.nu;
    Ok(vec![
        below("simulator.mass_step", "unitarity of both substeps", dm, 1e-12),
        below("simulator.w_step", "stationarity of the ground state", ds, 1e-8),
        below("simulator.zero_field", "the zero solution", z.mass_drift + z.energy_drift, f64::MIN_POSITIVE),
        below("simulator.growth", "growth of the unstable mode at rate ν", (rate - 1.0).abs(), 0.05),
    ])
}

/// Runs the registered checks, optionally restricted to one module.
pub fn run_suite(cfg: &RunConfig, only: Option<&str>) -> Result<Vec<CheckRecord>> {
    if let Some(m) = only {
        if !MODULES.contains(&m) {
            return Err(config("only", m, "one of radial_core, ground_state, nonlinearity, linearized, virial, modulation, simulator"));
        }
    }
    let ctx = Context::new(cfg.clone());
    let mut out = Vec::new();
    for m in MODULES {
        if only.is_some_and(|o| o != m) {
            continue;
        }
        let recs = match m {
            "radial_core" => check_radial_core(&ctx),
            "ground_state" => check_ground_state(&ctx),
            "nonlinearity" => check_nonlinearity(&ctx),
            "linearized" => check_linearized(&ctx),
            "virial" => check_virial(&ctx),
            "modulation" => check_modulation(&ctx),
            _ => check_simulator(&ctx),
        };
        match recs {
            Ok(r) => out.extend(r),
            Err(e) => out.push(CheckRecord { id: format!("{m}.error"), paper_ref: e.to_string(), pass: false, measured: f64::NAN, tolerance: 0.0 }),
        }
    }
    Ok(out)
}

/// One JSON record per line.
pub fn records_jsonl(recs: &[CheckRecord]) -> String {
    let mut s = String::new();
    for r in recs {
        let _ = writeln!(s, "{}", serde_json::to_string(r).expect("record serializes"));
    }
    s
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    format: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn wrap<T: Serialize>(cfg: &RunConfig, body: T) -> String {
    serde_json::to_string_pretty(&Wrapped { format: FORMAT, config: cfg, body }).expect("report serializes")
}

pub fn cmd_constants(cfg: &RunConfig) -> Result<String> {
    let c = constants_closed_form(cfg.n)?;
    Ok(wrap(cfg, c))
}

pub fn cmd_eigen(cfg: &RunConfig) -> Result<String> {
    let ctx = Context::new(cfg.clone());
    Ok(wrap(cfg, ctx.pair()?.summary()))
}

fn csv_string<F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>>(cfg: &RunConfig, f: F) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w).map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    let body = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    Ok(format!("{}\n{}", cfg.header_line(), String::from_utf8(body).expect("csv is utf-8")))
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Reduced modulation law from `t0` to `t1`.
pub fn cmd_ode(cfg: &RunConfig) -> Result<String> {
    cfg.require_regime()?;
    if !(cfg.t0 < cfg.t1 && cfg.t1 < 0.0) {
        return Err(config("t1", cfg.t1, "negative real later than t0"));
    }
    let ctx = Context::new(cfg.clone());
    let model = ctx.model(cfg.coupling)?;
    let s0 = ReducedState {
        t: cfg.t0,
        params: BubbleParams::new(-std::f64::consts::FRAC_PI_2, 1.0, cfg.theta0, model.lambda_cf(cfg.t0))?,
        a1_plus: cfg.a1p0,
        a1_minus: 0.0,
        a2_plus: cfg.a2p0,
        a2_minus: 0.0,
        k_forcing: cfg.forcing,
    };
    let k = cfg.ode_samples.max(2);
    let (l0, l1) = ((-cfg.t0).ln(), (-cfg.t1).ln());
    let outs: Vec<f64> = (0..k).map(|i| -(l0 + (l1 - l0) * i as f64 / (k - 1) as f64).exp()).collect();
    let runr = integrate_reduced(&model, &s0, &outs, Tolerance { rtol: cfg.rtol, atol: 1e-300 })?;
    csv_string(cfg, |w| {
        w.write_record(["t", "lambda", "theta", "a1p", "a1m", "a2p", "a2m", "lambda_closed_form"])?;
        for s in &runr.states {
            w.write_record(
                [s.t, s.params.lambda, s.params.theta, s.a1_plus, s.a1_minus, s.a2_plus, s.a2_minus, model.lambda_cf(s.t)].map(fmt),
            )?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
pub struct SimulateSummary {
    pub t_start: f64,
    pub dt: f64,
    pub steps: usize,
    pub lambda_gap: f64,
    pub lambda_rate_constant: f64,
    pub theta_rate_constant: f64,
    pub lambda_rate_relative: f64,
    pub psi_constant: f64,
    pub unstable_growth: Option<f64>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub exit: Option<String>,
}

/// Two-bubble experiment: trajectory CSV and a JSON summary.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(String, String)> {
    cfg.require_regime()?;
    let ctx = Context::new(cfg.clone());
    let pair = ctx.pair()?;
    let model = ctx.model(Coupling::Amplitude)?;
    let g = RadialGrid::build(cfg.n, cfg.r_max, cfg.sim_nodes, Grading::Tangent { scale: cfg.lambda0.sqrt() })?;
    let m = Modulator::new(g, pair.clone());
    let q = build_q(cfg.n, cfg.virial_c, cfg.virial_r)?;
    let t = model.time_of_lambda(cfg.lambda0);
    let ef = cfg.lambda0.powi(4) / pair.nu;
    let sc = SimConfig {
        t_start: t,
        t_end: t + cfg.efolds * ef,
        dt: cfg.dt_factor * ef,
        output_stride: cfg.stride,
        decomposition: true,
        seed: cfg.seed,
    };
    let rep = two_bubble_experiment(&m, &model, &q, t, cfg.lambda0, cfg.a1, cfg.a2, &sc)?;
    let cons = conservation_audit(&rep.trajectory);
    let csv = csv_string(cfg, |w| {
        w.write_record(TrajSample::CSV_HEADER)?;
        for s in &rep.trajectory.samples {
            w.write_record(s.csv_row().map(fmt))?;
        }
        Ok(())
    })?;
    let summary = SimulateSummary {
        t_start: t,
        dt: sc.dt,
        steps: rep.trajectory.steps,
        lambda_gap: rep.lambda_gap,
        lambda_rate_constant: rep.lambda_rate_constant,
        theta_rate_constant: rep.theta_rate_constant,
        lambda_rate_relative: rep.lambda_rate_relative,
        psi_constant: rep.psi_constant,
        unstable_growth: rep.unstable_growth,
        mass_drift: cons.mass_drift,
        energy_drift: cons.energy_drift,
        exit: rep.exit,
    };
    Ok((csv, wrap(cfg, summary)))
}

#[derive(Serialize)]
pub struct ShootSummary {
    pub backend: Backend,
    pub best: ShootPoint,
    pub best_is_strict_max: bool,
    pub probe_spacing: f64,
    pub neighborhood: Vec<ShootPoint>,
}

fn shoot_csv(cfg: &RunConfig, pts: &[ShootPoint]) -> Result<String> {
    csv_string(cfg, |w| {
        w.write_record(["p0", "p1", "p2", "exit_time", "exit_face"])?;
        for e in pts {
            w.write_record([fmt(e.p[0]), fmt(e.p[1]), fmt(e.p[2]), fmt(e.exit_time), e.exit_face.as_str().to_string()])?;
        }
        Ok(())
    })
}

/// Exit landscape over the cube: CSV and a JSON summary.
pub fn cmd_shoot(cfg: &RunConfig) -> Result<(String, String)> {
    cfg.require_regime()?;
    let ctx = Context::new(cfg.clone());
    match cfg.backend {
        Backend::Reduced => {
            let model = ctx.model(Coupling::Normalized)?;
            let (t, t0) = (cfg.shoot_t, cfg.shoot_t0);
            let rep = shoot(|p| reduced_exit(&model, t, t0, p), t, t0, cfg.resolution, cfg.spacing)?;
            let summary = ShootSummary {
                backend: cfg.backend,
                best: rep.best,
                best_is_strict_max: rep.best_is_strict_max,
                probe_spacing: rep.probe_spacing,
                neighborhood: rep.neighborhood,
            };
            Ok((shoot_csv(cfg, &rep.landscape)?, wrap(cfg, summary)))
        }
        Backend::Pde => {
            let pair = ctx.pair()?;
            let model = ctx.model(Coupling::Amplitude)?;
            let g = RadialGrid::build(cfg.n, cfg.r_max, cfg.sim_nodes, Grading::Tangent { scale: cfg.lambda0.sqrt() })?;
            let m = Modulator::new(g, pair.clone());
            let ef = cfg.lambda0.powi(4) / pair.nu;
            let probe = PdeProbe {
                modulator: &m,
                model: &model,
                lambda0: cfg.lambda0,
                amplitude: cfg.probe_amplitude,
                dt: cfg.dt_factor * ef,
                horizon: cfg.probe_efolds * ef,
                stride: cfg.stride.min(100),
            };
            let res = cfg.resolution.max(2);
            let pts: Vec<ShootPoint> = (0..res)
                .map(|i| probe.exit([0.0, 0.0, -0.5 + i as f64 / (res - 1) as f64]))
                .collect::<Result<_>>()?;
            let best = *pts.iter().max_by(|a, b| a.exit_offset.partial_cmp(&b.exit_offset).unwrap()).expect("nonempty slice");
            let strict = pts.iter().filter(|e| e.p != best.p).all(|e| e.exit_offset < best.exit_offset);
            let summary = ShootSummary { backend: cfg.backend, best, best_is_strict_max: strict, probe_spacing: 1.0 / (res - 1) as f64, neighborhood: vec![] };
            Ok((shoot_csv(cfg, &pts)?, wrap(cfg, summary)))
        }
    }
}
