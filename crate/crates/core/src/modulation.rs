//! Two-bubble modulation: decomposition, rate system, reduced dynamics,
//! initial data and cube coordinates.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::ground_state::{llw_profile, lw_profile, scaled, w_profile, Constants};
use crate::linearized::{alpha_project, EigenPair};
use crate::nonlinearity::{f_eval, fprime_apply};
use crate::ode::{dopri5, Tolerance};
use crate::radial_core::{RadialField, RadialGrid};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleParams {
    pub zeta: f64,
    pub mu: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl BubbleParams {
    pub fn new(zeta: f64, mu: f64, theta: f64, lambda: f64) -> Result<BubbleParams> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(config("mu", mu, "positive finite real"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(config("lambda", lambda, "positive finite real"));
        }
        Ok(BubbleParams { zeta, mu, theta, lambda })
    }

    /// `(−π/2, 1, 0, λ)`
    pub fn canonical(lambda: f64) -> BubbleParams {
        BubbleParams { zeta: -FRAC_PI_2, mu: 1.0, theta: 0.0, lambda }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.zeta, self.mu, self.theta, self.lambda]
    }
}

#[derive(Clone, Debug)]
pub struct ModulationFrame {
    pub time: f64,
    pub params: BubbleParams,
    pub g: RadialField,
    pub a1_plus: f64,
    pub a1_minus: f64,
    pub a2_plus: f64,
    pub a2_minus: f64,
    pub g_norm: f64,
}

/// Sampled bubble profiles at one parameter point.
struct Profiles {
    a: Vec<C64>,
    b: Vec<C64>,
    la: Vec<C64>,
    lb: Vec<C64>,
    lla: Vec<C64>,
    llb: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeInfo {
    pub iterations: usize,
    /// `max_k |⟨v_k, g⟩|/∥v_k∥`
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatesReport {
    /// `(ζ′, μ′, θ′, λ′)`
    pub rates: [f64; 4],
    /// `(μ⁴ζ′, μ³μ′, λ⁴θ′, λ³λ′)`
    pub scaled: [f64; 4],
    pub m: [[f64; 4]; 4],
    pub b: [f64; 4],
    pub condition: f64,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub g0: RadialField,
    /// `(a₁⁺, a₁⁻, b₁, c₁, a₂⁺, a₂⁻, b₂, c₂)`
    pub coefficients: [f64; 8],
    pub matrix: [[f64; 8]; 8],
    /// Largest off-diagonal row sum over the diagonal, with unit-normalized
    /// basis and test functions.
    pub dominance: f64,
    /// Spectral pairings in the order `(α₁⁺, α₁⁻, α₂⁺, α₂⁻)`.
    pub spectral: [f64; 4],
    /// Normalized orthogonality residuals.
    pub orthogonality: [f64; 4],
    pub g_norm: f64,
    pub in_window: bool,
}

/// Decomposition and rate machinery on a fixed grid.
#[derive(Clone)]
pub struct Modulator {
    pub grid: Arc<RadialGrid>,
    pub pair: Arc<EigenPair>,
    /// Largest admissible `λ/μ`.
    pub eta: f64,
}

fn sample(grid: &RadialGrid, n: usize, scale: f64, phase: f64, prof: fn(usize, f64) -> f64) -> Vec<C64> {
    let ph = C64::from_polar(1.0, phase);
    grid.nodes().iter().map(|r| ph * scaled(n, scale, *r, |s| prof(n, s))).collect()
}

fn cmul(a: C64, v: &[C64]) -> Vec<C64> {
    v.iter().map(|z| a * z).collect()
}

impl Modulator {
    pub fn new(grid: Arc<RadialGrid>, pair: Arc<EigenPair>) -> Modulator {
        Modulator { grid, pair, eta: 0.2 }
    }

    fn n(&self) -> usize {
        self.grid.dim
    }

    fn profiles(&self, p: &BubbleParams) -> Profiles {
        let (g, n) = (&*self.grid, self.n());
        Profiles {
            a: sample(g, n, p.mu, p.zeta, w_profile),
            b: sample(g, n, p.lambda, p.theta, w_profile),
            la: sample(g, n, p.mu, p.zeta, lw_profile),
            lb: sample(g, n, p.lambda, p.theta, lw_profile),
            lla: sample(g, n, p.mu, p.zeta, llw_profile),
            llb: sample(g, n, p.lambda, p.theta, llw_profile),
        }
    }

    /// `e^{iζ}W_μ + e^{iθ}W_λ`
    pub fn ansatz(&self, p: &BubbleParams) -> RadialField {
        let pr = self.profiles(p);
        RadialField::new(self.grid.clone(), pr.a.iter().zip(&pr.b).map(|(x, y)| x + y).collect())
    }

    fn tests(pr: &Profiles) -> [Vec<C64>; 4] {
        [cmul(I, &pr.la), cmul(-C64::from(1.0), &pr.a), cmul(I, &pr.lb), cmul(-C64::from(1.0), &pr.b)]
    }

    /// `J_kj = ⟨∂_j v_k, g⟩ − ⟨v_k, ∂_j U⟩`
    fn jacobian(&self, pr: &Profiles, p: &BubbleParams, g: &[C64]) -> Matrix4<f64> {
        let grid = &self.grid;
        let v = Self::tests(pr);
        let du = [cmul(I, &pr.a), cmul(C64::from(-1.0 / p.mu), &pr.la), cmul(I, &pr.b), cmul(C64::from(-1.0 / p.lambda), &pr.lb)];
        let zero = C64::from(0.0);
        let mut dv: [[Option<Vec<C64>>; 4]; 4] = Default::default();
        dv[0][0] = Some(cmul(-C64::from(1.0), &pr.la));
        dv[0][1] = Some(cmul(-I / p.mu, &pr.lla));
        dv[1][0] = Some(cmul(-I, &pr.a));
        dv[1][1] = Some(cmul(C64::from(1.0 / p.mu), &pr.la));
        dv[2][2] = Some(cmul(-C64::from(1.0), &pr.lb));
        dv[2][3] = Some(cmul(-I / p.lambda, &pr.llb));
        dv[3][2] = Some(cmul(-I, &pr.b));
        dv[3][3] = Some(cmul(C64::from(1.0 / p.lambda), &pr.lb));
        let _ = zero;
        Matrix4::from_fn(|k, j| {
            let t1 = dv[k][j].as_ref().map(|d| grid.inner(d, g)).unwrap_or(0.0);
            t1 - grid.inner(&v[k], &du[j])
        })
    }

    fn residuals(&self, pr: &Profiles, g: &[C64]) -> ([f64; 4], [f64; 4]) {
        let v = Self::tests(pr);
        let mut r = [0.0; 4];
        let mut nv = [0.0; 4];
        for k in 0..4 {
            r[k] = self.grid.inner(&v[k], g);
            nv[k] = self.grid.norm(&v[k]);
        }
        (r, nv)
    }

    /// `⟨v_k, g⟩/∥v_k∥` for the four conditions.
    pub fn orthogonality(&self, p: &BubbleParams, g: &RadialField) -> [f64; 4] {
        let pr = self.profiles(p);
        let (r, nv) = self.residuals(&pr, &g.values);
        [r[0] / nv[0], r[1] / nv[1], r[2] / nv[2], r[3] / nv[3]]
    }

    /// Frame for given parameters and remainder.
    pub fn frame(&self, time: f64, params: BubbleParams, g: RadialField) -> ModulationFrame {
        let (a1p, a1m) = alpha_project(&self.pair, params.zeta, params.mu, &g);
        let (a2p, a2m) = alpha_project(&self.pair, params.theta, params.lambda, &g);
        let g_norm = g.energy_norm();
        ModulationFrame { time, params, g, a1_plus: a1p, a1_minus: a1m, a2_plus: a2p, a2_minus: a2m, g_norm }
    }

    fn check_regime(&self, p: &BubbleParams) -> Result<()> {
        if p.lambda / p.mu > self.eta || p.lambda <= 0.0 || p.mu <= 0.0 {
            return Err(Error::Regime(format!("lambda/mu = {:.4} outside (0, {}]", p.lambda / p.mu, self.eta)));
        }
        Ok(())
    }

    /// Newton iteration on the four orthogonality conditions.
    pub fn decompose(&self, u: &RadialField, guess: BubbleParams, time: f64) -> Result<(ModulationFrame, DecomposeInfo)> {
        self.check_regime(&guess)?;
        let floor = 1e-14 * u.norm();
        let mut p = guess;
        let mut last = f64::INFINITY;
        for it in 0..=20 {
            let pr = self.profiles(&p);
            let g: Vec<C64> = u.values.iter().zip(pr.a.iter().zip(&pr.b)).map(|(x, (a, b))| x - a - b).collect();
            let (r, nv) = self.residuals(&pr, &g);
            let res = (0..4).map(|k| (r[k] / nv[k]).abs()).fold(0.0, f64::max);
            let gn = self.grid.norm(&g);
            let tol = (1e-8 * gn).max(floor);
            last = res;
            if res <= tol {
                let frame = self.frame(time, p, RadialField::new(self.grid.clone(), g));
                return Ok((frame, DecomposeInfo { iterations: it, residual: res, tolerance: tol }));
            }
            if it == 20 {
                break;
            }
            let j = self.jacobian(&pr, &p, &g);
            let rhs = -Vector4::new(r[0], r[1], r[2], r[3]);
            let step = j.lu().solve(&rhs).ok_or_else(|| Error::Degenerate("singular decomposition Jacobian".into()))?;
            let mut next = BubbleParams { zeta: p.zeta + step[0], mu: p.mu + step[1], theta: p.theta + step[2], lambda: p.lambda + step[3] };
            let mut damp = 1.0;
            while next.mu <= 0.5 * p.mu || next.lambda <= 0.5 * p.lambda {
                damp *= 0.5;
                next = BubbleParams {
                    zeta: p.zeta + damp * step[0],
                    mu: p.mu + damp * step[1],
                    theta: p.theta + damp * step[2],
                    lambda: p.lambda + damp * step[3],
                };
            }
            p = next;
            self.check_regime(&p)?;
        }
        Err(Error::Decomposition { iterations: 20, residual: last })
    }

    /// `−iΔ²g + i(f(u) − f(e^{iζ}W_μ) − f(e^{iθ}W_λ))`, the flow with the
    /// bubble equations cancelled analytically.
    pub fn structured_du_dt(&self, frame: &ModulationFrame) -> RadialField {
        let n = self.n();
        let pr = self.profiles(&frame.params);
        let b2 = self.grid.bilaplacian(&frame.g.values);
        let values = (0..self.grid.len())
            .map(|j| {
                let u = pr.a[j] + pr.b[j] + frame.g.values[j];
                -I * b2[j] + I * (f_eval(u, n) - f_eval(pr.a[j], n) - f_eval(pr.b[j], n))
            })
            .collect();
        RadialField::new(self.grid.clone(), values)
    }

    /// Differentiates the orthogonality conditions along `du_dt` and solves
    /// `M·(μ⁴ζ′, μ³μ′, λ⁴θ′, λ³λ′) = B`.
    pub fn modulation_rates(&self, frame: &ModulationFrame, du_dt: &RadialField) -> Result<RatesReport> {
        let p = &frame.params;
        let pr = self.profiles(p);
        let j = self.jacobian(&pr, p, &frame.g.values);
        let s = [p.mu.powi(4), p.mu.powi(3), p.lambda.powi(4), p.lambda.powi(3)];
        let m = Matrix4::from_fn(|k, c| j[(k, c)] / s[c]);
        let v = Self::tests(&pr);
        let b = Vector4::from_fn(|k, _| -self.grid.inner(&v[k], &du_dt.values));
        let sv = m.svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if !(cond <= 1e6) {
            return Err(Error::Degenerate(format!("rate matrix condition number {cond:.3e}")));
        }
        let x = m.lu().solve(&b).ok_or_else(|| Error::Degenerate("singular rate matrix".into()))?;
        let mut mm = [[0.0; 4]; 4];
        for k in 0..4 {
            for c in 0..4 {
                mm[k][c] = m[(k, c)];
            }
        }
        Ok(RatesReport {
            rates: [x[0] / s[0], x[1] / s[1], x[2] / s[2], x[3] / s[3]],
            scaled: [x[0], x[1], x[2], x[3]],
            m: mm,
            b: [b[0], b[1], b[2], b[3]],
            condition: cond,
        })
    }

    /// `K = −⟨e^{iθ}ΛW_λ, f(U + g) − f(U) − f′(U)g⟩` with `U = e^{iζ}W_μ + e^{iθ}W_λ`.
    pub fn k_term(&self, frame: &ModulationFrame) -> f64 {
        let n = self.n();
        let pr = self.profiles(&frame.params);
        let d: Vec<C64> = (0..self.grid.len())
            .map(|j| {
                let u = pr.a[j] + pr.b[j];
                let g = frame.g.values[j];
                f_eval(u + g, n) - f_eval(u, n) - fprime_apply(u, g, n)
            })
            .collect();
        -self.grid.inner(&pr.lb, &d)
    }

    /// The remainder `g⁰` solving the 8×8 system for `u(T) = −iW + W_{λ⁰} + g⁰`.
    pub fn initial_data(&self, model: &ReducedModel, t: f64, lambda0: f64, a1: f64, a2: f64) -> Result<InitialData> {
        if !(t < 0.0) {
            return Err(config("T", t, "negative real"));
        }
        let p = BubbleParams::canonical(lambda0);
        self.check_regime(&p)?;
        let grid = &self.grid;
        let pr = self.profiles(&p);
        let (a1p, a1m) = self.pair.alpha(grid, p.zeta, p.mu);
        let (a2p, a2m) = self.pair.alpha(grid, p.theta, p.lambda);
        let l4 = lambda0.powi(4);
        let basis: [Vec<C64>; 8] = [
            cmul(I, &a1m),
            cmul(-I, &a1p),
            sample(grid, self.n(), 1.0, 0.0, w_profile),
            sample(grid, self.n(), 1.0, -FRAC_PI_2, lw_profile),
            cmul(I * l4, &a2m),
            cmul(-I * l4, &a2p),
            cmul(I, &pr.b),
            pr.lb.clone(),
        ];
        let tests: [Vec<C64>; 8] = [
            a1p.clone(),
            a1m.clone(),
            sample(grid, self.n(), 1.0, 0.0, lw_profile),
            sample(grid, self.n(), 1.0, FRAC_PI_2, w_profile),
            a2p.clone(),
            a2m.clone(),
            cmul(I / l4, &pr.lb),
            cmul(-C64::from(1.0 / l4), &pr.b),
        ];
        let mat = DMatrix::from_fn(8, 8, |i, j| grid.inner(&tests[i], &basis[j]));
        let nb: Vec<f64> = basis.iter().map(|b| grid.norm(b)).collect();
        let nt: Vec<f64> = tests.iter().map(|b| grid.norm(b)).collect();
        let mut dominance = 0.0f64;
        for i in 0..8 {
            let d = mat[(i, i)].abs() / (nt[i] * nb[i]);
            let off: f64 = (0..8).filter(|&j| j != i).map(|j| mat[(i, j)].abs() / (nt[i] * nb[j])).sum();
            dominance = dominance.max(off / d);
        }
        if !(dominance < 1.0) {
            return Err(Error::Regime(format!("initial-data matrix not diagonally dominant (ratio {dominance:.3})")));
        }
        let rhs = DVector::from_vec(vec![a1, 0.0, 0.0, 0.0, a2, 0.0, 0.0, 0.0]);
        let x = mat.clone().lu().solve(&rhs).ok_or_else(|| Error::Degenerate("initial-data matrix singular".into()))?;
        let mut values = vec![C64::from(0.0); grid.len()];
        for (j, b) in basis.iter().enumerate() {
            for (v, z) in values.iter_mut().zip(b) {
                *v += z * x[j];
            }
        }
        let g0 = RadialField::new(grid.clone(), values);
        let spectral = [grid.inner(&a1p, &g0.values), grid.inner(&a1m, &g0.values), grid.inner(&a2p, &g0.values), grid.inner(&a2m, &g0.values)];
        let orthogonality = self.orthogonality(&p, &g0);
        let mut coefficients = [0.0; 8];
        let mut matrix = [[0.0; 8]; 8];
        for i in 0..8 {
            coefficients[i] = x[i];
            for j in 0..8 {
                matrix[i][j] = mat[(i, j)];
            }
        }
        let g_norm = g0.energy_norm();
        let in_window = model.in_initial_window(t, lambda0, a1, a2);
        Ok(InitialData { g0, coefficients, matrix, dominance, spectral, orthogonality, g_norm, in_window })
    }
}

/// How the bubble interaction enters the reduced law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Interaction coefficients normalized as if `W(0) = 1`.
    Normalized,
    /// Coefficients multiplied by `W(0) = C_N`, matching the flow of the PDE.
    Amplitude,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducedModel {
    pub constants: Constants,
    pub nu: f64,
    pub coupling: Coupling,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReducedState {
    pub t: f64,
    pub params: BubbleParams,
    pub a1_plus: f64,
    pub a1_minus: f64,
    pub a2_plus: f64,
    pub a2_minus: f64,
    pub k_forcing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducedRun {
    pub states: Vec<ReducedState>,
    pub steps: usize,
    pub stopped: Option<String>,
}

impl ReducedModel {
    pub fn new(constants: Constants, nu: f64, coupling: Coupling) -> Result<ReducedModel> {
        if constants.n < 13 {
            return Err(config("N", constants.n, "integer >= 13"));
        }
        Ok(ReducedModel { constants, nu, coupling })
    }

    fn nf(&self) -> f64 {
        self.constants.n as f64
    }

    /// 1 or `C_N`; also the ratio between the normalized time `τ` and `t`.
    pub fn factor(&self) -> f64 {
        match self.coupling {
            Coupling::Normalized => 1.0,
            Coupling::Amplitude => self.constants.c_n,
        }
    }

    /// `λ′ = k_λ λ^{(N−10)/2}`
    pub fn k_lambda(&self) -> f64 {
        self.factor() * self.constants.c1 / (2.0 * self.constants.w_mass)
    }

    /// `θ′ = −k_θ θ λ^{(N−12)/2} + …`
    pub fn k_theta(&self) -> f64 {
        self.factor() * self.constants.c2 / (2.0 * self.constants.w_mass)
    }

    pub fn c_tilde(&self) -> f64 {
        (2.0 / ((self.nf() - 12.0) * self.k_lambda())).powf(2.0 / (self.nf() - 12.0))
    }

    pub fn exponent(&self) -> f64 {
        2.0 / (self.nf() - 12.0)
    }

    pub fn lambda_cf(&self, t: f64) -> f64 {
        self.c_tilde() * t.abs().powf(-self.exponent())
    }

    pub fn dlambda_cf(&self, t: f64) -> f64 {
        let b = self.exponent();
        b * self.c_tilde() * t.abs().powf(-b - 1.0)
    }

    /// `τ = factor·t`
    pub fn tau(&self, t: f64) -> f64 {
        self.factor() * t
    }

    /// `t` at which the closed form equals `λ`.
    pub fn time_of_lambda(&self, lambda: f64) -> f64 {
        -(self.c_tilde() / lambda).powf(1.0 / self.exponent())
    }

    /// `θ(t)` solving the unforced linear law along the closed form.
    pub fn theta_cf(&self, t0: f64, theta0: f64, t: f64) -> f64 {
        let kappa = self.k_theta() * self.c_tilde().powf((self.nf() - 12.0) / 2.0);
        theta0 * (t.abs() / t0.abs()).powf(kappa)
    }

    /// `ν∫_{t0}^{t1} λ_cf^{−4}` (the log growth of `a₂⁺`).
    pub fn unstable_exponent(&self, t0: f64, t1: f64) -> f64 {
        let b = 4.0 * self.exponent();
        self.nu * self.c_tilde().powi(-4) * (t0.abs().powf(b + 1.0) - t1.abs().powf(b + 1.0)) / (b + 1.0)
    }

    /// `t1` with `ν∫_{t0}^{t1} λ_cf^{−4} = growth`.
    pub fn time_for_growth(&self, t0: f64, growth: f64) -> f64 {
        let b = 4.0 * self.exponent();
        let lhs = t0.abs().powf(b + 1.0) - growth * (b + 1.0) * self.c_tilde().powi(4) / self.nu;
        -lhs.max(0.0).powf(1.0 / (b + 1.0))
    }

    pub fn rhs(&self, y: &[f64], mu: f64, k_forcing: f64) -> Vec<f64> {
        let nf = self.nf();
        let (l, th) = (y[0], y[1]);
        let w = self.constants.w_mass;
        let l4 = l.powi(4);
        let m4 = mu.powi(4);
        vec![
            self.k_lambda() * l.powf((nf - 10.0) / 2.0),
            -self.k_theta() * th * l.powf((nf - 12.0) / 2.0) + k_forcing / (2.0 * l4 * w),
            self.nu / m4 * y[2],
            -self.nu / m4 * y[3],
            self.nu / l4 * y[4],
            -self.nu / l4 * y[5],
        ]
    }

    /// Whether `(λ⁰, a₁, a₂)` lies in the initial window at time `T`.
    pub fn in_initial_window(&self, t: f64, lambda0: f64, a1: f64, a2: f64) -> bool {
        let p = cube_coords(self, t, lambda0, a1, a2);
        p.iter().all(|v| v.abs() <= 0.5)
    }

    pub fn state_from_cube(&self, t: f64, p: [f64; 3]) -> ReducedState {
        let (lambda, a1, a2) = cube_inverse(self, t, p);
        ReducedState {
            t,
            params: BubbleParams::canonical(lambda),
            a1_plus: a1,
            a1_minus: 0.0,
            a2_plus: a2,
            a2_minus: 0.0,
            k_forcing: 0.0,
        }
    }
}

/// Integrates the reduced law from `s0` and samples at `outputs`.
pub fn integrate_reduced(model: &ReducedModel, s0: &ReducedState, outputs: &[f64], tol: Tolerance) -> Result<ReducedRun> {
    if !(s0.params.lambda > 0.0) {
        return Err(config("lambda", s0.params.lambda, "positive real"));
    }
    if outputs.iter().any(|t| *t < s0.t) || outputs.windows(2).any(|w| w[1] < w[0]) {
        return Err(config("t1", format!("{outputs:?}"), "increasing times after t0"));
    }
    let mu = s0.params.mu;
    let kf = s0.k_forcing;
    let y0 = [s0.params.lambda, s0.params.theta, s0.a1_plus, s0.a1_minus, s0.a2_plus, s0.a2_minus];
    let run = dopri5(
        |_, y| model.rhs(y, mu, kf),
        s0.t,
        &y0,
        outputs,
        tol,
        |_, y| {
            if !(y[0] > 0.0) || !y[0].is_finite() {
                Some("lambda left (0, inf)".to_string())
            } else if y[2..].iter().any(|a| a.abs() > 1e150) {
                Some("unstable mode overflow guard".to_string())
            } else {
                None
            }
        },
    );
    let states = run
        .samples
        .iter()
        .map(|(t, y)| ReducedState {
            t: *t,
            params: BubbleParams { zeta: s0.params.zeta, mu, theta: y[1], lambda: y[0] },
            a1_plus: y[2],
            a1_minus: y[3],
            a2_plus: y[4],
            a2_minus: y[5],
            k_forcing: kf,
        })
        .collect();
    Ok(ReducedRun { states, steps: run.steps, stopped: run.stopped })
}

/// `max |λ_cf′ − k_λλ_cf^{(N−10)/2}|/|λ_cf′|` over `ts`.
pub fn closed_form_residual(model: &ReducedModel, ts: &[f64]) -> f64 {
    let nf = model.nf();
    ts.iter()
        .map(|&t| {
            let d = model.dlambda_cf(t);
            (d - model.k_lambda() * model.lambda_cf(t).powf((nf - 10.0) / 2.0)).abs() / d.abs()
        })
        .fold(0.0, f64::max)
}

/// `(p₀, p₁, p₂) = X_t^{−1}(λ, a₁⁺, a₂⁺)`; envelopes are evaluated at `|τ|`.
pub fn cube_coords(model: &ReducedModel, t: f64, lambda: f64, a1p: f64, a2p: f64) -> [f64; 3] {
    let nf = model.nf();
    let tau = model.tau(t).abs();
    let e_l = tau.powf(5.0 / (2.0 * (nf - 12.0)));
    let e_a = tau.powf(nf / (2.0 * (nf - 12.0)));
    [(lambda - model.lambda_cf(t)) * e_l, a1p * e_a, a2p * e_a]
}

/// `X_t(p)`
pub fn cube_inverse(model: &ReducedModel, t: f64, p: [f64; 3]) -> (f64, f64, f64) {
    let nf = model.nf();
    let tau = model.tau(t).abs();
    let e_l = tau.powf(-5.0 / (2.0 * (nf - 12.0)));
    let e_a = tau.powf(-nf / (2.0 * (nf - 12.0)));
    (model.lambda_cf(t) + p[0] * e_l, p[1] * e_a, p[2] * e_a)
}

pub fn in_cube(p: &[f64; 3]) -> bool {
    p.iter().all(|v| v.abs() <= 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::constants_closed_form;

    fn model(c: Coupling) -> ReducedModel {
        ReducedModel::new(constants_closed_form(13).unwrap(), 793.0938, c).unwrap()
    }

    #[test]
    fn closed_form_is_exact() {
        for c in [Coupling::Normalized, Coupling::Amplitude] {
            let m = model(c);
            assert!(closed_form_residual(&m, &[-10.0, -100.0, -1000.0]) < 1e-12);
        }
    }

    #[test]
    fn cube_round_trip() {
        let m = model(Coupling::Normalized);
        let p = [0.3, -0.2, 0.45];
        let (l, a1, a2) = cube_inverse(&m, -50.0, p);
        let q = cube_coords(&m, -50.0, l, a1, a2);
        for k in 0..3 {
            assert!((p[k] - q[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_constant() {
        let p = model(Coupling::Normalized);
        let a = model(Coupling::Amplitude);
        let cn = p.constants.c_n;
        assert!((a.c_tilde() * cn * cn / p.c_tilde() - 1.0).abs() < 1e-12);
        assert!((p.c_tilde() / p.constants.c_tilde - 1.0).abs() < 1e-12);
    }
}
