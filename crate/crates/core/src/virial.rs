//! Localized virial cutoff `q`, the operators `A(λ)`, `A₀(λ)` and their audits.
//!
//! All derivatives of `q` are evaluated through the Euler operator `D = r∂_r`:
//! the quantities `r^{−2}D^k q` are bounded and depend only on `ln(r/R)`, so the
//! matching radius `R₀`, which is astronomically large for small `ε`, is carried
//! as `ln R₀`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::radial_core::{RadialField, RadialGrid};

const KMAX: usize = 7;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, b| a * b as f64)
}

/// Stirling numbers of the second kind, `S(k, m)` for `k, m < KMAX`.
fn stirling2() -> &'static [[f64; KMAX]; KMAX] {
    static S: OnceLock<[[f64; KMAX]; KMAX]> = OnceLock::new();
    S.get_or_init(stirling_table)
}

fn stirling_table() -> [[f64; KMAX]; KMAX] {
    let mut s = [[0.0; KMAX]; KMAX];
    s[0][0] = 1.0;
    for k in 1..KMAX {
        for m in 1..=k {
            s[k][m] = m as f64 * s[k - 1][m] + s[k - 1][m - 1];
        }
    }
    s
}

/// Monomial coefficients of the quintic-smooth step `S(t) = t⁶Σ_{k≤5} C(5+k,k)(1−t)^k`.
fn smoothstep_coeffs() -> &'static [f64; 12] {
    static C: OnceLock<[f64; 12]> = OnceLock::new();
    C.get_or_init(smoothstep_table)
}

fn smoothstep_table() -> [f64; 12] {
    let mut c = [0.0; 12];
    for k in 0..=5 {
        let a = binom(5 + k, k);
        for l in 0..=k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            c[6 + l] += a * binom(k, l) * sign;
        }
    }
    c
}

fn poly_deriv_eval(c: &[f64], m: usize, t: f64) -> f64 {
    let mut s = 0.0;
    for (i, ci) in c.iter().enumerate().skip(m) {
        let f: f64 = ((i - m + 1)..=i).map(|x| x as f64).product();
        s += ci * f * t.powi((i - m) as i32);
    }
    s
}

/// `χ^{(m)}(x)`: 1 on `[0,1]`, smooth step down on `[1,2]`, 0 beyond.
pub fn chi_deriv(x: f64, m: usize) -> f64 {
    if x <= 1.0 {
        if m == 0 {
            1.0
        } else {
            0.0
        }
    } else if x >= 2.0 {
        0.0
    } else {
        let s = smoothstep_coeffs();
        let v = poly_deriv_eval(s, m, x - 1.0);
        if m == 0 {
            1.0 - v
        } else {
            -v
        }
    }
}

type Poly = Vec<f64>;

fn pmul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `P(D − a)` with `P(x) = x² + (N−2)x`.
fn p_shift(n: usize, a: f64) -> Poly {
    let m = n as f64 - 2.0;
    vec![a * a - m * a, m - 2.0 * a, 1.0]
}

#[derive(Clone, Debug)]
struct EulerPolys {
    d1: Poly,
    qrr: Poly,
    lap: Poly,
    bilap: Poly,
    trilap: Poly,
    rr_lap: Poly,
}

impl EulerPolys {
    fn new(n: usize) -> Self {
        let p0 = p_shift(n, 0.0);
        let p2 = p_shift(n, 2.0);
        let p4 = p_shift(n, 4.0);
        let bilap = pmul(&p2, &p0);
        let trilap = pmul(&p4, &bilap);
        let rr_lap = pmul(&pmul(&[-2.0, 1.0], &[-3.0, 1.0]), &p0);
        EulerPolys { d1: vec![0.0, 1.0], qrr: vec![0.0, -1.0, 1.0], lap: p0, bilap, trilap, rr_lap }
    }
}

fn apply_poly(p: &[f64], dq: &[f64; KMAX]) -> f64 {
    p.iter().zip(dq.iter()).map(|(a, b)| a * b).sum()
}

/// Scale-free derivative data of `q` at one point (with `R = 1`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QLocal {
    /// `q′/r`
    pub qr_over_r: f64,
    pub q_rr: f64,
    pub lap: f64,
    /// `r²∂_rr Δq`
    pub r2_rr_lap: f64,
    /// `r²Δ²q`
    pub r2_bilap: f64,
    /// `r⁴Δ³q`
    pub r4_trilap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffQ {
    pub n: usize,
    pub c: f64,
    pub r: f64,
    pub epsilon: f64,
    pub ln_r0: f64,
    pub ln_r_tilde: f64,
    pub coeffs: [f64; 6],
    exps: [f64; 6],
    /// `q₀(R₀)/R₀²` followed by `q₀^{(j)}(R₀)R₀^{j−2}`
    tail: [f64; 6],
    #[serde(skip)]
    polys: EulerPolysHolder,
}

#[derive(Clone, Debug)]
struct EulerPolysHolder(EulerPolys);

impl Default for EulerPolysHolder {
    fn default() -> Self {
        EulerPolysHolder(EulerPolys::new(13))
    }
}

/// Tail coefficients of `q₀` on `s ≥ 1` (the `c₅` sign is fixed so that the
/// junction at `s = 1` is `C⁵`).
pub fn tail_coefficients(n: usize, eps: f64) -> [f64; 6] {
    let nf = n as f64;
    let e = eps;
    [
        nf * (nf - 2.0) * (nf - 4.0) / ((e - 1.0) * (e - 2.0) * (nf - e) * (nf - 2.0 - e) * (nf - 4.0 - e)),
        e * nf * (nf - 2.0) * (nf - 4.0) / ((e - 1.0) * (nf - 1.0) * (nf - 3.0) * (nf - 5.0)),
        -e * nf / (2.0 * (e - 2.0) * (nf - 6.0)),
        -e * (nf - 4.0) / (8.0 * (nf - e) * (nf - 1.0)),
        e * nf / (4.0 * (nf - 2.0 - e) * (nf - 3.0)),
        -e * nf * (nf - 2.0) / (8.0 * (nf - 4.0 - e) * (nf - 5.0) * (nf - 6.0)),
    ]
}

fn exponents(n: usize, eps: f64) -> [f64; 6] {
    let nf = n as f64;
    [2.0 - eps, 1.0, 0.0, 2.0 - nf, 4.0 - nf, 6.0 - nf]
}

fn falling(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a - i as f64))
}

/// `(q₀, q₀′, …, q₀⁽⁵⁾)` at `s = 1⁺`.
pub fn q0_limits_at_one(n: usize, eps: f64) -> [f64; 6] {
    let c = tail_coefficients(n, eps);
    let a = exponents(n, eps);
    let mut out = [0.0; 6];
    for (k, o) in out.iter_mut().enumerate() {
        *o = c.iter().zip(&a).map(|(ci, ai)| ci * falling(*ai, k)).sum();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub worst: f64,
    pub bound: f64,
    /// `ln(r/R)` of the worst sample
    pub ln_location: f64,
}

impl CutoffQ {
    fn with(n: usize, c: f64, r: f64, eps: f64, ln_r0: f64) -> CutoffQ {
        let coeffs = tail_coefficients(n, eps);
        let exps = exponents(n, eps);
        let mut tail = [0.0; 6];
        // r^{−2}·r^j q₀^{(j)} at R₀, without forming R₀
        for (j, t) in tail.iter_mut().enumerate() {
            *t = coeffs.iter().zip(&exps).map(|(ci, ai)| ci * falling(*ai, j) * ((ai - 2.0) * ln_r0).exp()).sum();
        }
        CutoffQ {
            n,
            c,
            r,
            epsilon: eps,
            ln_r0,
            ln_r_tilde: ln_r0 + 3f64.ln(),
            coeffs,
            exps,
            tail,
            polys: EulerPolysHolder(EulerPolys::new(n)),
        }
    }

    pub fn r0(&self) -> f64 {
        self.ln_r0.exp()
    }

    pub fn r_tilde(&self) -> f64 {
        self.r * self.ln_r_tilde.exp()
    }

    /// `s^{−2}D^k q(s)` for `k = 0..6`.
    fn euler(&self, ln_s: f64, side: Side) -> [f64; KMAX] {
        let mut out = [0.0; KMAX];
        let inner = ln_s < 0.0 || (ln_s == 0.0 && side == Side::Left);
        let power = !inner && (ln_s < self.ln_r0 || (ln_s == self.ln_r0 && side == Side::Left));
        if inner {
            for (k, o) in out.iter_mut().enumerate() {
                *o = 0.5 * 2f64.powi(k as i32);
            }
        } else if power {
            for (k, o) in out.iter_mut().enumerate() {
                *o = self
                    .coeffs
                    .iter()
                    .zip(&self.exps)
                    .map(|(ci, ai)| ci * ai.powi(k as i32) * ((ai - 2.0) * ln_s).exp())
                    .sum();
            }
        } else {
            let rho = (ln_s - self.ln_r0).exp();
            let x = rho - 1.0;
            let inv = rho.powi(-2);
            if x >= 2.0 {
                out[0] = inv * self.tail[0];
                return out;
            }
            // T^{(m)}(x) with T = Σ a_j x^j/j! χ(x)
            let mut tm = [0.0; KMAX];
            for (m, t) in tm.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 1..=5 {
                    let aj = self.tail[j];
                    for l in 0..=m {
                        let pd = if m - l > j { 0.0 } else { x.powi((j - (m - l)) as i32) / factorial(j - (m - l)) };
                        acc += aj * binom(m, l) * pd * chi_deriv(x, l);
                    }
                }
                *t = acc;
            }
            let st = stirling2();
            out[0] = inv * (self.tail[0] + tm[0]);
            for k in 1..KMAX {
                let mut dk = 0.0;
                for m in 1..=k {
                    dk += st[k][m] * rho.powi(m as i32) * tm[m];
                }
                out[k] = inv * dk;
            }
        }
        out
    }

    fn local_from(&self, e: &[f64; KMAX]) -> QLocal {
        let p = &self.polys.0;
        QLocal {
            qr_over_r: apply_poly(&p.d1, e),
            q_rr: apply_poly(&p.qrr, e),
            lap: apply_poly(&p.lap, e),
            r2_rr_lap: apply_poly(&p.rr_lap, e),
            r2_bilap: apply_poly(&p.bilap, e),
            r4_trilap: apply_poly(&p.trilap, e),
        }
    }

    /// Local data at `ln(r/R)`.
    pub fn local(&self, ln_s: f64) -> QLocal {
        self.local_from(&self.euler(ln_s, Side::Right))
    }

    fn ln_s(&self, r: f64) -> f64 {
        (r / self.r).ln()
    }

    /// `q(r)`; infinite past the representable range.
    pub fn value(&self, r: f64) -> f64 {
        let e = self.euler(self.ln_s(r), Side::Right);
        let s = r / self.r;
        self.r * self.r * s * s * e[0]
    }

    /// `q′(r)`
    pub fn dq(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        r * self.local(self.ln_s(r)).qr_over_r
    }

    /// `Δq(r)`
    pub fn lap(&self, r: f64) -> f64 {
        self.local(self.ln_s(r)).lap
    }

    pub fn q_rr(&self, r: f64) -> f64 {
        self.local(self.ln_s(r)).q_rr
    }

    /// `∂_rr Δq(r)`
    pub fn rr_lap(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        self.local(self.ln_s(r)).r2_rr_lap / (r * r)
    }

    pub fn bilap(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        self.local(self.ln_s(r)).r2_bilap / (r * r)
    }

    pub fn trilap(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        self.local(self.ln_s(r)).r4_trilap / (r * r * r * r)
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Largest mismatch of `r^{−2}D^k q`, `k ≤ 5`, across `r = R` and `r = R₀R`.
    pub fn junction_mismatch(&self) -> f64 {
        let mut worst = 0.0f64;
        for at in [0.0, self.ln_r0] {
            let l = self.euler(at, Side::Left);
            let r = self.euler(at, Side::Right);
            for k in 0..6 {
                worst = worst.max((l[k] - r[k]).abs() / l[k].abs().max(1.0));
            }
        }
        worst
    }

    fn samples(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for i in 0..=400 {
            v.push(-3.0 + 3.0 * i as f64 / 400.0);
        }
        for i in 1..=400 {
            let t = i as f64 / 400.0;
            v.push(10f64.ln() * t * t);
        }
        for i in 1..=800 {
            v.push(self.ln_r0 * i as f64 / 800.0);
        }
        for i in 0..=1200 {
            let x = 2.0 * i as f64 / 1200.0;
            v.push(self.ln_r0 + (1.0 + x).ln());
        }
        v.push(self.ln_r_tilde + 1.0);
        v
    }

    fn power_samples(&self) -> Vec<f64> {
        self.samples().into_iter().filter(|s| *s > 0.0 && *s <= self.ln_r0).collect()
    }

    fn tail_samples(&self) -> Vec<f64> {
        self.samples().into_iter().filter(|s| *s >= self.ln_r0).collect()
    }

    fn check_on(&self, pts: &[f64], k_bound: f64) -> Vec<PropertyCheck> {
        let mut out = Vec::new();
        let mut add = |name: &str, bound: f64, f: &dyn Fn(&QLocal) -> f64| {
            let mut worst = f64::NEG_INFINITY;
            let mut at = 0.0;
            for &s in pts {
                for side in [Side::Left, Side::Right] {
                    let l = self.local_from(&self.euler(s, side));
                    let v = f(&l);
                    if v > worst {
                        worst = v;
                        at = s;
                    }
                }
            }
            out.push(PropertyCheck { name: name.into(), pass: worst <= bound, worst, bound, ln_location: at });
        };
        add("|q'|/r <= K", k_bound, &|l| l.qr_over_r.abs());
        add("|lap q| <= NK", k_bound * self.n as f64, &|l| l.lap.abs());
        add("-q_rr <= c", self.c, &|l| -l.q_rr);
        add("r^2(2 d_rr lap q + lap^2 q) <= c", self.c, &|l| 2.0 * l.r2_rr_lap + l.r2_bilap);
        add("-r^4 lap^3 q <= c", self.c, &|l| -l.r4_trilap);
        out
    }

    /// Samples every pointwise property and the algebraic identities.
    pub fn properties(&self) -> Vec<PropertyCheck> {
        let mut out = self.check_on(&self.samples(), 2.0);
        let sum = self.coefficient_sum();
        out.push(PropertyCheck {
            name: "sum c_i = 1/2".into(),
            pass: (sum - 0.5).abs() <= 1e-12,
            worst: (sum - 0.5).abs(),
            bound: 1e-12,
            ln_location: 0.0,
        });
        let jm = self.junction_mismatch();
        out.push(PropertyCheck { name: "C5 junctions".into(), pass: jm <= 1e-8, worst: jm, bound: 1e-8, ln_location: self.ln_r0 });
        let e = self.euler(self.ln_r_tilde + 0.5, Side::Right);
        let flat = e[1..].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        out.push(PropertyCheck {
            name: "constant past R_tilde".into(),
            pass: flat == 0.0,
            worst: flat,
            bound: 0.0,
            ln_location: self.ln_r_tilde,
        });
        let inner = (0..50).map(|i| -5.0 + 5.0 * i as f64 / 50.0).map(|s| {
            let e = self.euler(s, Side::Left);
            (e[0] - 0.5).abs()
        });
        let w = inner.fold(0.0f64, f64::max);
        out.push(PropertyCheck { name: "q = r^2/2 on r <= R".into(), pass: w == 0.0, worst: w, bound: 0.0, ln_location: 0.0 });
        out
    }
}

/// Builds `q(c, R)`, choosing `ε` and `R₀` so that the convexity bounds hold.
pub fn build_q(n: usize, c: f64, r: f64) -> Result<CutoffQ> {
    if !(c > 0.0 && c < 1.0) {
        return Err(config("c", c, "real in (0, 1)"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(config("R", r, "positive finite real"));
    }
    if n < 13 {
        return Err(config("N", n, "integer >= 13"));
    }
    let mut eps = 1e-2;
    let mut q = None;
    for _ in 0..40 {
        let trial = CutoffQ::with(n, c, r, eps, (10.0 / eps).max(100.0).ln());
        if trial.check_on(&trial.power_samples(), 2.0).iter().all(|p| p.pass) {
            q = Some(trial);
            break;
        }
        eps *= 0.5;
    }
    let mut q = q.ok_or_else(|| Error::Construction(format!("no epsilon down to {eps:.3e} satisfies the convexity bounds")))?;
    for _ in 0..60 {
        if q.check_on(&q.tail_samples(), 2.0).iter().all(|p| p.pass) {
            let fails: Vec<_> = q.properties().into_iter().filter(|p| !p.pass).collect();
            if fails.is_empty() {
                return Ok(q);
            }
            let f = &fails[0];
            return Err(Error::Construction(format!("{} violated: {:.3e} > {:.3e} at ln(r/R) = {:.3}", f.name, f.worst, f.bound, f.ln_location)));
        }
        let ln_r0 = 2.0 * q.ln_r0;
        q = CutoffQ::with(n, c, r, q.epsilon, ln_r0);
    }
    let fails: Vec<_> = q.check_on(&q.tail_samples(), 2.0).into_iter().filter(|p| !p.pass).collect();
    Err(Error::Construction(format!("tail splice keeps failing: {:?}", fails.first().map(|f| (&f.name, f.worst, f.ln_location)))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VirialKind {
    A,
    A0,
}

/// `A(λ)h = (N−4)/(2Nλ⁴)Δq(x/λ)h + λ^{−3}∇q(x/λ)·∇h`; `A₀` uses `1/(2λ⁴)`.
pub fn apply_virial(q: &CutoffQ, kind: VirialKind, lambda: f64, h: &RadialField) -> RadialField {
    let grid = &h.grid;
    let nf = grid.dim as f64;
    let k = match kind {
        VirialKind::A => (nf - 4.0) / (2.0 * nf),
        VirialKind::A0 => 0.5,
    };
    let dh = grid.d_dr(&h.values);
    let l4 = lambda.powi(-4);
    let l3 = lambda.powi(-3);
    let values = grid
        .nodes()
        .iter()
        .zip(&h.values)
        .zip(&dh)
        .map(|((r, v), d)| {
            let s = r / lambda;
            v * (k * l4 * q.lap(s)) + d * (l3 * q.dq(s))
        })
        .collect();
    RadialField::new(grid.clone(), values)
}

#[derive(Clone, Debug, Serialize)]
pub struct VirialAudit {
    pub lhs: f64,
    pub term_rr: f64,
    pub term_grad: f64,
    pub term_mass: f64,
    pub rhs: f64,
    pub rel_diff: f64,
    /// `c₀λ^{−4}∥h∥²_E − λ^{−4}∫_{r≤Rλ}|Δh|² − LHS`
    pub margin: f64,
}

/// Both sides of the integration-by-parts identity for `⟨A₀h, −Δ²h⟩` (λ = 1
/// after rescaling) and the margin of the virial upper bound.
pub fn virial_audit(q: &CutoffQ, lambda: f64, h: &RadialField, c0_target: f64) -> VirialAudit {
    let grid = &h.grid;
    let nf = grid.dim as f64;
    let a0h = apply_virial(q, VirialKind::A0, lambda, h);
    let b = grid.bilaplacian(&h.values);
    let nb: Vec<C64> = b.iter().map(|z| -z).collect();
    let lhs = grid.inner(&a0h.values, &nb);
    let hr = grid.d_dr(&h.values);
    let lap = grid.laplacian(&h.values);
    let hrr: Vec<C64> = lap.iter().zip(&hr).zip(grid.nodes()).map(|((l, d), r)| l - d * ((nf - 1.0) / r)).collect();
    let l4 = lambda.powi(-4);
    let mut d_rr = Vec::with_capacity(grid.len());
    let mut d_grad = Vec::with_capacity(grid.len());
    let mut d_mass = Vec::with_capacity(grid.len());
    for (j, r) in grid.nodes().iter().enumerate() {
        let s = r / lambda;
        let loc = q.local((s / q.r).ln());
        let qrr = loc.q_rr;
        let qr_r = loc.qr_over_r;
        let grad_coef = (loc.r2_rr_lap + 0.5 * loc.r2_bilap) / (r * r);
        let mass_coef = loc.r4_trilap / (r * r * r * r);
        d_rr.push(-2.0 * (qrr * hrr[j].norm_sqr() + qr_r * (nf - 1.0) / (r * r) * hr[j].norm_sqr()));
        d_grad.push(hr[j].norm_sqr() * grad_coef);
        d_mass.push(-0.25 * h.values[j].norm_sqr() * mass_coef);
    }
    let scale = l4;
    let term_rr = grid.integrate(&d_rr) * scale;
    let term_grad = grid.integrate(&d_grad) * scale;
    let term_mass = grid.integrate(&d_mass) * scale;
    let rhs = term_rr + term_grad + term_mass;
    let en: f64 = lap.iter().zip(grid.weights()).map(|(z, w)| z.norm_sqr() * w).sum();
    let inner: f64 = lap
        .iter()
        .zip(grid.weights())
        .zip(grid.nodes())
        .filter(|(_, r)| **r <= q.r * lambda)
        .map(|((z, w), _)| z.norm_sqr() * w)
        .sum();
    let margin = c0_target * l4 * en - l4 * inner - lhs;
    VirialAudit { lhs, term_rr, term_grad, term_mass, rhs, rel_diff: (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE), margin }
}

/// `ψ = θ − ⟨g, iA₀(λ)g⟩/(4∥W∥²)`
pub fn corrected_phase(q: &CutoffQ, theta: f64, lambda: f64, g: &RadialField, w_mass: f64) -> f64 {
    let a = apply_virial(q, VirialKind::A0, lambda, g);
    let ia: Vec<C64> = a.values.iter().map(|z| z * C64::new(0.0, 1.0)).collect();
    theta - g.grid.inner(&g.values, &ia) / (4.0 * w_mass)
}

/// Both sides of the scaling law `A(λ)(h_λ) = λ^{−4}(Ah)_λ`, using a grid
/// whose nodes are exactly `λ` times those of `grid`.
pub fn scaling_defect(q: &CutoffQ, kind: VirialKind, lambda: f64, grid: &Arc<RadialGrid>, h: &dyn Fn(f64) -> C64) -> Result<f64> {
    use crate::radial_core::Grading;
    let scaled = RadialGrid::build(grid.dim, grid.r_max * lambda, grid.len(), Grading::Tangent { scale: grid.scale() * lambda })?;
    let amp = lambda.powf(-(grid.dim as f64 - 4.0) / 2.0);
    let h1 = RadialField::from_fn(grid.clone(), h);
    let hl = RadialField::from_fn(scaled.clone(), |r| h(r / lambda) * amp);
    let lhs = apply_virial(q, kind, lambda, &hl);
    let rhs = apply_virial(q, kind, 1.0, &h1);
    let k = lambda.powi(-4) * amp;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (a, b) in lhs.values.iter().zip(&rhs.values) {
        num = num.max((a - b * k).norm());
        den = den.max((b * k).norm());
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints() {
        assert!((chi_deriv(1.0 + 1e-12, 0) - 1.0).abs() < 1e-10);
        assert!(chi_deriv(2.0 - 1e-12, 0).abs() < 1e-10);
        let d: f64 = 1e-9;
        for m in 1..=5 {
            let tol = 2.0 * 332640.0 * d.powi(6 - m as i32) + 1e-6;
            assert!(chi_deriv(1.0 + d, m).abs() < tol, "{m}");
            assert!(chi_deriv(2.0 - d, m).abs() < tol, "{m}");
        }
    }

    #[test]
    fn limits_at_one() {
        let l = q0_limits_at_one(13, 1e-3);
        let want = [0.5, 1.0, 1.0, 0.0, 0.0, 0.0];
        for k in 0..6 {
            assert!((l[k] - want[k]).abs() < 1e-8, "{k} {}", l[k]);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(build_q(13, 0.0, 1.0).is_err());
        assert!(build_q(13, 0.1, -1.0).is_err());
    }
}
