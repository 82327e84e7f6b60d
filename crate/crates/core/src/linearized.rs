//! Linearized operators around the ground state, the unstable eigenpair,
//! the dual functionals α± and projected coercivity of the quadratic forms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::banded::{Band, BandLu, ComplexBand};
use crate::error::{Error, Result};
use crate::ground_state::{lw_profile, p_exp, scaled, w_profile};
use crate::nonlinearity::{f_eval, fprime_apply, fprime_matrix};
use crate::radial_core::{Grading, RadialField, RadialGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Potentials and symmetrized operators `L±` on one grid.
#[derive(Clone, Debug)]
pub struct LinOps {
    pub grid: Arc<RadialGrid>,
    pub w: Vec<f64>,
    pub lw: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    l_plus: Band,
    l_minus: Band,
}

impl LinOps {
    pub fn new(grid: Arc<RadialGrid>) -> LinOps {
        let n = grid.dim;
        let nf = n as f64;
        let p = p_exp(n);
        let w = grid.sample(|r| w_profile(n, r));
        let lw = grid.sample(|r| lw_profile(n, r));
        let v_minus: Vec<f64> = w.iter().map(|x| x.powf(p)).collect();
        let v_plus: Vec<f64> = v_minus.iter().map(|v| (nf + 4.0) / (nf - 4.0) * v).collect();
        let mut l_plus = grid.bilap_band().clone();
        let mut l_minus = grid.bilap_band().clone();
        for j in 0..grid.len() {
            l_plus.add(j, j, -v_plus[j]);
            l_minus.add(j, j, -v_minus[j]);
        }
        LinOps { grid, w, lw, v_plus, v_minus, l_plus, l_minus }
    }

    pub fn sym_band(&self, sign: Sign) -> &Band {
        match sign {
            Sign::Plus => &self.l_plus,
            Sign::Minus => &self.l_minus,
        }
    }

    pub fn apply(&self, sign: Sign, g: &[f64]) -> Vec<f64> {
        let b = self.grid.bilaplacian(g);
        let v = match sign {
            Sign::Plus => &self.v_plus,
            Sign::Minus => &self.v_minus,
        };
        b.iter().zip(v).zip(g).map(|((x, v), g)| x - v * g).collect()
    }

    /// Relative residuals `∥L⁻W∥/∥f(W)∥` and `∥L⁺ΛW∥/∥f(W)∥`.
    pub fn kernel_residuals(&self) -> (f64, f64) {
        let g = &self.grid;
        let fw: Vec<f64> = self.w.iter().zip(&self.v_minus).map(|(w, v)| w * v).collect();
        let scale = g.inner_real(&fw, &fw).sqrt();
        let a = self.apply(Sign::Minus, &self.w);
        let b = self.apply(Sign::Plus, &self.lw);
        (g.inner_real(&a, &a).sqrt() / scale, g.inner_real(&b, &b).sqrt() / scale)
    }
}

pub fn apply_l(sign: Sign, g: &RadialField) -> RadialField {
    let ops = LinOps::new(g.grid.clone());
    let re = ops.apply(sign, &g.real_part());
    RadialField::from_real(g.grid.clone(), &re)
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub nu: f64,
    pub y1: RadialField,
    pub y2: RadialField,
    pub norm_y1: f64,
    pub norm_y2: f64,
    /// `∥L⁺Y1 + νY2∥ / (ν∥Y2∥)`
    pub residual_plus: f64,
    /// `∥L⁻Y2 − νY1∥ / ν`
    pub residual_minus: f64,
    /// positive real eigenvalues found on the coarse seed grid
    pub candidates: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSummary {
    pub nu: f64,
    pub norm_y1: f64,
    pub norm_y2: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub y1_dot_y2: f64,
    pub w_dot_y1: f64,
    pub lw_dot_y2: f64,
    pub candidates: Vec<f64>,
}

impl EigenPair {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.y1.grid
    }

    /// `Y_λ` resampled on another grid.
    pub fn y_on(&self, grid: &RadialGrid, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid();
        let y1 = self.y1.real_part();
        let y2 = self.y2.real_part();
        let a = lambda.powf(-(g.dim as f64 - 4.0) / 2.0);
        let s1 = grid.nodes().iter().map(|r| g.interpolate(&y1, r / lambda) * a).collect();
        let s2 = grid.nodes().iter().map(|r| g.interpolate(&y2, r / lambda) * a).collect();
        (s1, s2)
    }

    /// `α±_{θ,λ} = e^{iθ}λ^{−4}(Y2_λ ± iY1_λ)` on `grid`.
    pub fn alpha(&self, grid: &RadialGrid, theta: f64, lambda: f64) -> (Vec<C64>, Vec<C64>) {
        let (y1, y2) = self.y_on(grid, lambda);
        let ph = C64::from_polar(lambda.powi(-4), theta);
        let plus = y1.iter().zip(&y2).map(|(a, b)| ph * C64::new(*b, *a)).collect();
        let minus = y1.iter().zip(&y2).map(|(a, b)| ph * C64::new(*b, -*a)).collect();
        (plus, minus)
    }

    pub fn summary(&self) -> EigenSummary {
        let g = self.grid();
        let y1 = self.y1.real_part();
        let y2 = self.y2.real_part();
        let w = g.sample(|r| w_profile(g.dim, r));
        let lw = g.sample(|r| lw_profile(g.dim, r));
        let nw = g.inner_real(&w, &w).sqrt();
        let nlw = g.inner_real(&lw, &lw).sqrt();
        EigenSummary {
            nu: self.nu,
            norm_y1: self.norm_y1,
            norm_y2: self.norm_y2,
            residual_plus: self.residual_plus,
            residual_minus: self.residual_minus,
            y1_dot_y2: g.inner_real(&y1, &y2),
            w_dot_y1: g.inner_real(&w, &y1) / (nw * self.norm_y1),
            lw_dot_y2: g.inner_real(&lw, &y2) / (nlw * self.norm_y2),
            candidates: self.candidates.clone(),
        }
    }
}

fn block_dense(ops: &LinOps) -> DMatrix<f64> {
    let n = ops.grid.len();
    let lp = ops.l_plus.to_dense();
    let lm = ops.l_minus.to_dense();
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, n), (n, n)).copy_from(&lm);
    b.view_mut((n, 0), (n, n)).copy_from(&(-lp));
    b
}

/// Positive real eigenvalues of the block operator on a coarse grid.
fn coarse_candidates(dim: usize, r_max: f64, grading: Grading, n: usize) -> Result<Vec<f64>> {
    let grid = RadialGrid::build(dim, r_max, n, grading)?;
    let ops = LinOps::new(grid);
    let b = block_dense(&ops);
    let ev = b.complex_eigenvalues();
    let mut out: Vec<f64> = ev
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-6 * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(out)
}

fn interleaved_block(ops: &LinOps, sigma: f64) -> ComplexBand {
    let n = ops.grid.len();
    let k = ops.l_plus.kl;
    let mut b = ComplexBand::zeros(2 * n, 2 * k + 1, 2 * k + 1);
    for j in 0..n {
        for c in ops.l_minus.cols(j) {
            b.add(2 * j, 2 * c + 1, C64::new(ops.l_minus.get(j, c), 0.0));
            b.add(2 * j + 1, 2 * c, C64::new(-ops.l_plus.get(j, c), 0.0));
        }
        b.add(2 * j, 2 * j, C64::new(-sigma, 0.0));
        b.add(2 * j + 1, 2 * j + 1, C64::new(-sigma, 0.0));
    }
    b
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L⁺Y1 = −νY2`, `L⁻Y2 = νY1` for the positive eigenvalue.
pub fn solve_eigenpair(grid: &Arc<RadialGrid>) -> Result<EigenPair> {
    let seed_n = 256.min(grid.len());
    let candidates = coarse_candidates(grid.dim, grid.r_max, grid.grading, seed_n)?;
    let nu0 = *candidates.first().ok_or_else(|| Error::Spectral("no positive real eigenvalue on the seed grid".into()))?;
    let ops = LinOps::new(grid.clone());
    let n = grid.len();
    let sw = grid.sqrt_weights();
    // kernel directions in the symmetrized variable
    let ws: Vec<f64> = ops.w.iter().zip(sw).map(|(a, s)| a * s).collect();
    let lws: Vec<f64> = ops.lw.iter().zip(sw).map(|(a, s)| a * s).collect();
    let wlw = dot(&ws, &lws);
    let deflate = |x1: &mut [f64], x2: &mut [f64]| {
        let a = dot(&ws, x1) / wlw;
        for (x, l) in x1.iter_mut().zip(&lws) {
            *x -= a * l;
        }
        let b = dot(&lws, x2) / wlw;
        for (x, l) in x2.iter_mut().zip(&ws) {
            *x -= b * l;
        }
    };
    let mut x1: Vec<f64> = grid.nodes().iter().zip(sw).map(|(r, s)| (-r * r).exp() * s).collect();
    let mut x2: Vec<f64> = grid.nodes().iter().zip(sw).map(|(r, s)| (-0.5 * r * r).exp() * s).collect();
    let mut nu = nu0;
    let structured = |x1: &[f64], x2: &[f64]| -> f64 {
        let a = dot(x2, &ops.l_minus.matvec(x2));
        let b = dot(x1, &ops.l_plus.matvec(x1));
        (a - b) / (2.0 * dot(x1, x2))
    };
    for outer in 0..3 {
        let sigma = nu * (1.0 + 1e-9 * (outer as f64 + 1.0));
        let lu: BandLu = interleaved_block(&ops, sigma).factor()?;
        for _ in 0..4 {
            deflate(&mut x1, &mut x2);
            let mut b: Vec<C64> = (0..2 * n).map(|i| C64::new(if i % 2 == 0 { x1[i / 2] } else { x2[i / 2] }, 0.0)).collect();
            lu.solve_in_place(&mut b);
            for j in 0..n {
                x1[j] = b[2 * j].re;
                x2[j] = b[2 * j + 1].re;
            }
            let s = dot(&x1, &x1).sqrt();
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Spectral(format!("inverse iteration broke down near {nu}")));
            }
            x1.iter_mut().for_each(|v| *v /= s);
            x2.iter_mut().for_each(|v| *v /= s);
        }
        nu = structured(&x1, &x2);
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Spectral(format!("no positive eigenvalue; candidates {candidates:?}")));
    }
    let s = dot(&x1, &x1).sqrt();
    let sign = if x1[0] < 0.0 { -1.0 } else { 1.0 };
    x1.iter_mut().for_each(|v| *v *= sign / s);
    x2.iter_mut().for_each(|v| *v *= sign / s);
    let lp = ops.l_plus.matvec(&x1);
    let lm = ops.l_minus.matvec(&x2);
    let ny2 = dot(&x2, &x2).sqrt();
    let rp = lp.iter().zip(&x2).map(|(a, b)| (a + nu * b).powi(2)).sum::<f64>().sqrt() / (nu * ny2);
    let rm = lm.iter().zip(&x1).map(|(a, b)| (a - nu * b).powi(2)).sum::<f64>().sqrt() / nu;
    let y1 = grid.from_sym(&x1);
    let y2 = grid.from_sym(&x2);
    Ok(EigenPair {
        nu,
        y1: RadialField::from_real(grid.clone(), &y1),
        y2: RadialField::from_real(grid.clone(), &y2),
        norm_y1: 1.0,
        norm_y2: ny2,
        residual_plus: rp,
        residual_minus: rm,
        candidates,
    })
}

/// `Z_{θ,λ}g = −iΔ²g + if′(e^{iθ}W_λ)g`
pub fn z_apply(theta: f64, lambda: f64, g: &RadialField) -> RadialField {
    let grid = &g.grid;
    let n = grid.dim;
    let b = grid.bilaplacian(&g.values);
    let ph = C64::from_polar(1.0, theta);
    let i = C64::new(0.0, 1.0);
    let values = grid
        .nodes()
        .iter()
        .zip(&g.values)
        .zip(&b)
        .map(|((r, z), d)| {
            let u = ph * scaled(n, lambda, *r, |s| w_profile(n, s));
            -i * d + i * fprime_apply(u, *z, n)
        })
        .collect();
    RadialField::new(grid.clone(), values)
}

/// `(a⁺, a⁻) = (⟨α⁺_{θ,λ}, g⟩, ⟨α⁻_{θ,λ}, g⟩)`
pub fn alpha_project(pair: &EigenPair, theta: f64, lambda: f64, g: &RadialField) -> (f64, f64) {
    let (ap, am) = pair.alpha(&g.grid, theta, lambda);
    (g.grid.inner(&ap, &g.values), g.grid.inner(&am, &g.values))
}

/// Smallest eigenvalue of `P A P` on the range of the orthogonal projector `P`,
/// by Lanczos with full reorthogonalization.
pub(crate) fn lanczos_min<A, P>(apply: A, project: P, dim: usize, max_steps: usize, seed: u64) -> (f64, usize)
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    project(&mut q);
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let mut ritz = f64::INFINITY;
    for step in 0..max_steps.min(dim) {
        let qj = basis.last().unwrap();
        let mut w = apply(qj);
        project(&mut w);
        let a = dot(qj, &w);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        project(&mut w);
        let bn = dot(&w, &w).sqrt();
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        ritz = t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if bn < 1e-12 {
            return (ritz, step + 1);
        }
        if step >= 40 && step % 10 == 0 {
            if (ritz - last).abs() <= 1e-10 * ritz.abs().max(1e-3) {
                return (ritz, step + 1);
            }
            last = ritz;
        }
        beta.push(bn);
        w.iter_mut().for_each(|v| *v /= bn);
        basis.push(w);
    }
    (ritz, max_steps)
}

/// Which quadratic form to probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FormId {
    /// `⟨g, L⁺g⟩` on real g, projections {W, Y2}
    LPlus,
    /// `⟨g, L⁻g⟩` on real g, projection {ΛW}
    LMinus,
    /// linearization at `e^{iθ}W_λ`
    Mixed { theta: f64, lambda: f64 },
    /// `L⁺` at `W_λ` on real g with weights `1−2c` on `r ≤ r1`, `c` outside,
    /// projections {W_λ, Y2_λ}; `r1 = None` picks it from the potential tail
    Localized { theta: f64, lambda: f64, c: f64, r1: Option<f64> },
    /// as `Localized` with weights `1−2c` on `r ≥ r2`, `c` inside
    LocalizedInner { theta: f64, lambda: f64, c: f64, r2: f64 },
    /// linearization at `e^{iζ}W_μ + e^{iθ}W_λ`, eight projections
    TwoBubble { zeta: f64, mu: f64, theta: f64, lambda: f64 },
}

impl FormId {
    pub fn name(&self) -> &'static str {
        match self {
            FormId::LPlus => "L+",
            FormId::LMinus => "L-",
            FormId::Mixed { .. } => "mixed",
            FormId::Localized { .. } => "localized",
            FormId::LocalizedInner { .. } => "localized inner",
            FormId::TwoBubble { .. } => "two-bubble",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticFormReport {
    pub form_id: String,
    pub min_eigenvalue_projected: f64,
    pub projection_rank: usize,
    pub parameters: Vec<(String, f64)>,
    pub n_nodes: usize,
    pub lanczos_steps: usize,
}

/// Smallest `r₁` with `∥V∥_{L^{N/4}(r ≥ r₁)} < frac·∥V∥_{L^{N/4}}`.
pub fn tail_radius(grid: &RadialGrid, v: &[f64], frac: f64) -> f64 {
    let q = grid.dim as f64 / 4.0;
    let d: Vec<f64> = v.iter().zip(grid.weights()).map(|(x, w)| x.abs().powf(q) * w).collect();
    let total: f64 = d.iter().sum();
    let mut tail = 0.0;
    let target = frac.powf(q) * total;
    for j in (0..d.len()).rev() {
        tail += d[j];
        if tail >= target {
            return grid.nodes()[j];
        }
    }
    grid.nodes()[0]
}

struct FormData {
    comps: usize,
    pot: Vec<[[f64; 2]; 2]>,
    weight: Vec<f64>,
    proj: Vec<Vec<f64>>,
    params: Vec<(String, f64)>,
}

fn complex_proj(grid: &RadialGrid, v: &[C64]) -> Vec<f64> {
    let sw = grid.sqrt_weights();
    let mut out = vec![0.0; 2 * v.len()];
    for j in 0..v.len() {
        out[2 * j] = v[j].re * sw[j];
        out[2 * j + 1] = v[j].im * sw[j];
    }
    out
}

fn form_data(form: FormId, grid: &RadialGrid, pair: &EigenPair) -> FormData {
    let n = grid.dim;
    let len = grid.len();
    let sw = grid.sqrt_weights();
    let bubble = |ph: f64, lam: f64| -> Vec<C64> {
        grid.sample(|r| C64::from_polar(scaled(n, lam, r, |s| w_profile(n, s)), ph))
    };
    let lbubble = |ph: f64, lam: f64| -> Vec<C64> {
        grid.sample(|r| C64::from_polar(scaled(n, lam, r, |s| lw_profile(n, s)), ph))
    };
    let times_i = |v: Vec<C64>| -> Vec<C64> { v.into_iter().map(|z| z * C64::new(0.0, 1.0)).collect() };
    let pot_of = |u: &[C64]| -> Vec<[[f64; 2]; 2]> { u.iter().map(|z| fprime_matrix(*z, n)).collect() };
    let single = |theta: f64, lambda: f64| -> (Vec<[[f64; 2]; 2]>, Vec<Vec<f64>>) {
        let u = bubble(theta, lambda);
        let (ap, am) = pair.alpha(grid, theta, lambda);
        let proj = vec![
            complex_proj(grid, &u),
            complex_proj(grid, &times_i(lbubble(theta, lambda))),
            complex_proj(grid, &ap),
            complex_proj(grid, &am),
        ];
        (pot_of(&u), proj)
    };
    let real_plus = |lambda: f64| -> (Vec<[[f64; 2]; 2]>, Vec<Vec<f64>>) {
        let w = grid.sample(|r| scaled(n, lambda, r, |s| w_profile(n, s)));
        let k = (n as f64 + 4.0) / (n as f64 - 4.0);
        let pot = w.iter().map(|v| [[k * v.powf(p_exp(n)), 0.0], [0.0, 0.0]]).collect();
        let (_, y2) = pair.y_on(grid, lambda);
        (pot, vec![w.iter().zip(sw).map(|(a, s)| a * s).collect(), y2.iter().zip(sw).map(|(a, s)| a * s).collect()])
    };
    match form {
        FormId::LPlus | FormId::LMinus => {
            let ops_w = grid.sample(|r| w_profile(n, r));
            let p = p_exp(n);
            let nf = n as f64;
            let k = if form == FormId::LPlus { (nf + 4.0) / (nf - 4.0) } else { 1.0 };
            let pot = ops_w.iter().map(|w| [[k * w.powf(p), 0.0], [0.0, 0.0]]).collect();
            let proj = if form == FormId::LPlus {
                let (_, y2) = pair.y_on(grid, 1.0);
                vec![ops_w.iter().zip(sw).map(|(a, s)| a * s).collect(), y2.iter().zip(sw).map(|(a, s)| a * s).collect()]
            } else {
                vec![grid.sample(|r| lw_profile(n, r)).iter().zip(sw).map(|(a, s)| a * s).collect()]
            };
            FormData { comps: 1, pot, weight: vec![1.0; len], proj, params: vec![] }
        }
        FormId::Mixed { theta, lambda } => {
            let (pot, proj) = single(theta, lambda);
            FormData { comps: 2, pot, weight: vec![1.0; len], proj, params: vec![("theta".into(), theta), ("lambda".into(), lambda)] }
        }
        FormId::Localized { theta, lambda, c, r1 } => {
            let (pot, proj) = real_plus(lambda);
            let r1 = r1.unwrap_or_else(|| {
                let v: Vec<f64> = grid.sample(|r| scaled(n, lambda, r, |s| w_profile(n, s)).powf(p_exp(n)));
                tail_radius(grid, &v, 0.01)
            });
            let weight = grid.nodes().iter().map(|r| if *r <= r1 { 1.0 - 2.0 * c } else { c }).collect();
            FormData {
                comps: 1,
                pot,
                weight,
                proj,
                params: vec![("theta".into(), theta), ("lambda".into(), lambda), ("c".into(), c), ("r1".into(), r1)],
            }
        }
        FormId::LocalizedInner { theta, lambda, c, r2 } => {
            let (pot, proj) = real_plus(lambda);
            let weight = grid.nodes().iter().map(|r| if *r >= r2 { 1.0 - 2.0 * c } else { c }).collect();
            FormData {
                comps: 1,
                pot,
                weight,
                proj,
                params: vec![("theta".into(), theta), ("lambda".into(), lambda), ("c".into(), c), ("r2".into(), r2)],
            }
        }
        FormId::TwoBubble { zeta, mu, theta, lambda } => {
            let a = bubble(zeta, mu);
            let b = bubble(theta, lambda);
            let u: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (a1p, a1m) = pair.alpha(grid, zeta, mu);
            let (a2p, a2m) = pair.alpha(grid, theta, lambda);
            let proj = vec![
                complex_proj(grid, &times_i(lbubble(zeta, mu))),
                complex_proj(grid, &a),
                complex_proj(grid, &times_i(lbubble(theta, lambda))),
                complex_proj(grid, &b),
                complex_proj(grid, &a1p),
                complex_proj(grid, &a1m),
                complex_proj(grid, &a2p),
                complex_proj(grid, &a2m),
            ];
            FormData {
                comps: 2,
                pot: pot_of(&u),
                weight: vec![1.0; len],
                proj,
                params: vec![("zeta".into(), zeta), ("mu".into(), mu), ("theta".into(), theta), ("lambda".into(), lambda)],
            }
        }
    }
}

/// Minimal projected Rayleigh quotient of `∫m|Δg|² − ℜ∫ḡf′(U)g` over `∫|Δg|²`.
pub fn coercivity_min_eig(form: FormId, grid: &Arc<RadialGrid>, pair: &EigenPair) -> Result<QuadraticFormReport> {
    let data = form_data(form, grid, pair);
    let len = grid.len();
    let comps = data.comps;
    let dim = comps * len;
    let lu = ComplexBand::from_real(grid.lap_band(), C64::new(1.0, 0.0), C64::new(0.0, 0.0)).factor()?;
    let split = |v: &[f64], c: usize| -> Vec<f64> { (0..len).map(|j| v[comps * j + c]).collect() };
    let kinv = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for c in 0..comps {
            let s = lu.solve_real(&split(v, c));
            for j in 0..len {
                out[comps * j + c] = s[j];
            }
        }
        out
    };
    // constraints ⟨p, g⟩ = 0 become ⟨Δ̃⁻¹p, v⟩ = 0 with v = Δ̃g
    let mut q: Vec<DVector<f64>> = Vec::new();
    let proj_rank = data.proj.len();
    for p in &data.proj {
        let mut v = DVector::from_vec(kinv(p));
        let n0 = v.norm();
        for _ in 0..2 {
            for b in &q {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let nv = v.norm();
        if !(nv > 1e-8 * n0) {
            return Err(Error::Degenerate(format!("{}: projection directions are linearly dependent", form.name())));
        }
        q.push(v / nv);
    }
    let project = |x: &mut [f64]| {
        for _ in 0..2 {
            for b in &q {
                let c: f64 = b.iter().zip(x.iter()).map(|(a, y)| a * y).sum();
                x.iter_mut().zip(b.iter()).for_each(|(y, a)| *y -= c * a);
            }
        }
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        let s = kinv(v);
        let mut t = vec![0.0; dim];
        for j in 0..len {
            let m = &data.pot[j];
            for a in 0..comps {
                let mut acc = 0.0;
                for b in 0..comps {
                    acc += m[a][b] * s[comps * j + b];
                }
                t[comps * j + a] = acc;
            }
        }
        let tt = kinv(&t);
        (0..dim).map(|i| data.weight[i / comps] * v[i] - tt[i]).collect()
    };
    let (min, steps) = lanczos_min(apply, project, dim, 400, 11);
    Ok(QuadraticFormReport {
        form_id: form.name().to_string(),
        min_eigenvalue_projected: min,
        projection_rank: proj_rank,
        parameters: data.params,
        n_nodes: len,
        lanczos_steps: steps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyExpansion {
    pub params: [f64; 4],
    /// `E(e^{iζ}W_μ + e^{iθ}W_λ) − 2E(W)` from the interaction integral
    pub interaction: f64,
    /// `C₁θλ^{(N−4)/2}` with `W(0)` normalized to 1
    pub predicted: f64,
    /// with the `W(0) = C_N` amplitude factor
    pub predicted_amplitude: f64,
    pub de_g: f64,
    pub half_d2e_gg: f64,
    /// `E(U+g) − E(U) − ⟨DE,g⟩ − ½⟨D²E g,g⟩`
    pub cubic_remainder: f64,
    pub g_energy_norm: f64,
    pub regime_warning: bool,
}

/// Taylor terms of the energy around the two-bubble profile.
pub fn energy_expansion_audit(
    zeta: f64,
    mu: f64,
    theta: f64,
    lambda: f64,
    g: &RadialField,
    c1: f64,
) -> EnergyExpansion {
    let grid = &g.grid;
    let n = grid.dim;
    let nf = n as f64;
    let big_f = crate::nonlinearity::big_f;
    let a: Vec<C64> = grid.sample(|r| C64::from_polar(scaled(n, mu, r, |s| w_profile(n, s)), zeta));
    let b: Vec<C64> = grid.sample(|r| C64::from_polar(scaled(n, lambda, r, |s| w_profile(n, s)), theta));
    let inter: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| big_f(x + y, n) - big_f(*x, n) - big_f(*y, n) - (y.conj() * f_eval(*x, n)).re)
        .collect();
    let interaction = -grid.integrate(&inter);
    // DE(U) = Δ²U − f(U) = f(A) + f(B) − f(A+B) for exact bubbles
    let de: Vec<C64> = a.iter().zip(&b).map(|(x, y)| f_eval(*x, n) + f_eval(*y, n) - f_eval(x + y, n)).collect();
    let de_g = grid.inner(&de, &g.values);
    let lg = grid.laplacian(&g.values);
    let kin = grid.inner(&lg, &lg);
    let u: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let fp: Vec<C64> = u.iter().zip(&g.values).map(|(z, h)| fprime_apply(*z, *h, n)).collect();
    let half_d2e = 0.5 * (kin - grid.inner(&g.values, &fp));
    // E(U+g) − E(U) = Re∫ΔŪΔg + ½∫|Δg|² − ∫(F(U+g) − F(U)), with ∫ΔŪΔg = ⟨f(A)+f(B), g⟩
    let fab: Vec<C64> = a.iter().zip(&b).map(|(x, y)| f_eval(*x, n) + f_eval(*y, n)).collect();
    let cross = grid.inner(&fab, &g.values);
    let df: Vec<f64> = u.iter().zip(&g.values).map(|(z, h)| big_f(z + h, n) - big_f(*z, n)).collect();
    let de_total = cross + 0.5 * kin - grid.integrate(&df);
    let cubic = de_total - de_g - half_d2e;
    let predicted = c1 * theta * lambda.powf((nf - 4.0) / 2.0);
    let dev = (zeta + std::f64::consts::FRAC_PI_2).abs() + (mu - 1.0).abs() + theta.abs() + lambda + kin.sqrt();
    EnergyExpansion {
        params: [zeta, mu, theta, lambda],
        interaction,
        predicted,
        predicted_amplitude: crate::ground_state::c_n(n) * predicted,
        de_g,
        half_d2e_gg: half_d2e,
        cubic_remainder: cubic,
        g_energy_norm: kin.sqrt(),
        regime_warning: dev > 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_are_small() {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        let ops = LinOps::new(g);
        let (a, b) = ops.kernel_residuals();
        assert!(a < 1e-5 && b < 1e-5, "{a} {b}");
        assert!(ops.sym_band(Sign::Plus).asymmetry() < 1e-10);
    }

    #[test]
    fn lanczos_finds_smallest() {
        let d = 50;
        let (m, _) = lanczos_min(|x| x.iter().enumerate().map(|(i, v)| (i as f64 - 3.0) * v).collect(), |_| {}, d, 100, 1);
        assert!((m + 3.0).abs() < 1e-8);
    }
}
