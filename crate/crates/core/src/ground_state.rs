//! The explicit ground state, scaling, energy and closed-form constants.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};

use crate::error::{config, Error, Result};
use crate::nonlinearity;
use crate::radial_core::{sphere_area, RadialField, RadialGrid};

pub fn c_n(n: usize) -> f64 {
    let nf = n as f64;
    let base = (n * (n - 4) * (n * n - 4)) as f64;
    base.powf((nf - 4.0) / 8.0)
}

/// `8/(N−4)`
pub fn p_exp(n: usize) -> f64 {
    8.0 / (n as f64 - 4.0)
}

pub fn w_profile(n: usize, r: f64) -> f64 {
    c_n(n) * (1.0 + r * r).powf(-(n as f64 - 4.0) / 2.0)
}

/// ΛW in closed form.
pub fn lw_profile(n: usize, r: f64) -> f64 {
    let r2 = r * r;
    (n as f64 - 4.0) / 2.0 * w_profile(n, r) * (1.0 - r2) / (1.0 + r2)
}

/// `Λ(ΛW)` in closed form.
pub fn llw_profile(n: usize, r: f64) -> f64 {
    let c = (n as f64 - 4.0) / 2.0;
    let r2 = r * r;
    let phi = (1.0 - r2) / (1.0 + r2);
    c * w_profile(n, r) * (c * phi - 2.0 * c * r2 * phi / (1.0 + r2) - 4.0 * r2 / ((1.0 + r2) * (1.0 + r2)))
}

/// `v_λ(r) = λ^{−(N−4)/2} v(r/λ)` for a closed-form profile.
pub fn scaled<F: Fn(f64) -> f64>(n: usize, lambda: f64, r: f64, v: F) -> f64 {
    lambda.powf(-(n as f64 - 4.0) / 2.0) * v(r / lambda)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(config("lambda", lambda, "positive finite real"))
    }
}

pub fn w_real(grid: &RadialGrid, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let n = grid.dim;
    Ok(grid.sample(|r| scaled(n, lambda, r, |s| w_profile(n, s))))
}

pub fn lw_real(grid: &RadialGrid, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let n = grid.dim;
    Ok(grid.sample(|r| scaled(n, lambda, r, |s| lw_profile(n, s))))
}

pub fn w_field(grid: &Arc<RadialGrid>, lambda: f64) -> Result<RadialField> {
    let v = w_real(grid, lambda)?;
    Ok(RadialField::from_real(grid.clone(), &v))
}

/// `Λ_s f = (N/2 − s) f + r f′`
pub fn lambda_generator(s: f64, field: &RadialField) -> RadialField {
    RadialField::new(field.grid.clone(), field.grid.lambda_s(s, &field.values))
}

/// Rescale a sampled field by interpolation.
pub fn rescale<T: crate::radial_core::Sample>(grid: &RadialGrid, v: &[T], lambda: f64) -> Vec<T> {
    let a = lambda.powf(-(grid.dim as f64 - 4.0) / 2.0);
    grid.nodes().iter().map(|r| grid.interpolate(v, r / lambda) * a).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub tail_fraction: f64,
    pub tail_warning: bool,
}

/// `E(u) = ½∫|Δu|² − ∫F(u)`
pub fn energy(u: &RadialField) -> EnergyReport {
    let g = &u.grid;
    let n = g.dim;
    let lap = g.laplacian(&u.values);
    let kin: f64 = lap.iter().zip(g.weights()).map(|(z, w)| z.norm_sqr() * w).sum();
    let pot_density: Vec<f64> = u.values.iter().map(|z| nonlinearity::big_f(*z, n)).collect();
    let pot = g.integrate(&pot_density);
    let mass_density: Vec<f64> = u.values.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = g.integrate(&mass_density);
    let cut = 0.9 * g.r_max;
    let tail: f64 = g
        .nodes()
        .iter()
        .zip(&mass_density)
        .zip(g.weights())
        .filter(|((r, _), _)| **r > cut)
        .map(|((_, m), w)| m * w)
        .sum();
    let tail_fraction = if total > 0.0 { tail / total } else { 0.0 };
    EnergyReport {
        value: 0.5 * kin - pot,
        kinetic: 0.5 * kin,
        potential: pot,
        tail_fraction,
        tail_warning: tail_fraction > 1e-6,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C_N")]
    pub c_n: f64,
    #[serde(rename = "W_mass")]
    pub w_mass: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "E_W")]
    pub e_w: f64,
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    pub blowup_exponent: f64,
}

/// `∫₀^R (1+r²)^{−a} r^{N−1} dr`, with `R = ∞` for the complete integral.
pub fn radial_beta(n: usize, a: f64, r: f64) -> f64 {
    let x = n as f64 / 2.0;
    let y = a - x;
    let full = 0.5 * beta(x, y);
    if r.is_finite() {
        let t = r * r / (1.0 + r * r);
        full * beta_reg(x, y, t)
    } else {
        full
    }
}

#[derive(Clone, Copy, Debug)]
struct Integrals {
    w_mass: f64,
    c1: f64,
    c2: f64,
    crit: f64,
}

fn beta_integrals(n: usize, r: f64) -> Integrals {
    let nf = n as f64;
    let c = c_n(n);
    let s = sphere_area(n);
    let q = (nf + 4.0) / (nf - 4.0);
    let w_mass = c * c * s * radial_beta(n, nf - 4.0, r);
    let c1 = c.powf(q) * s * radial_beta(n, (nf + 4.0) / 2.0, r);
    let c2 = (nf + 4.0) / 2.0
        * c.powf(q)
        * s
        * (2.0 * radial_beta(n, (nf + 6.0) / 2.0, r) - radial_beta(n, (nf + 4.0) / 2.0, r));
    let crit = c.powf(2.0 * nf / (nf - 4.0)) * s * radial_beta(n, nf, r);
    Integrals { w_mass, c1, c2, crit }
}

pub fn c_tilde_from(n: usize, w_mass: f64, c1: f64) -> f64 {
    let nf = n as f64;
    (4.0 * w_mass / ((nf - 12.0) * c1)).powf(2.0 / (nf - 12.0))
}

/// Closed-form constants. `C_tilde` and the exponent are NaN for N = 12.
pub fn constants_closed_form(n: usize) -> Result<Constants> {
    if n < 5 {
        return Err(config("N", n, "integer >= 5"));
    }
    let nf = n as f64;
    let b = beta_integrals(n, f64::INFINITY);
    let (c_tilde, expo) = if n > 12 {
        (c_tilde_from(n, b.w_mass, b.c1), 2.0 / (nf - 12.0))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Constants {
        n,
        c_n: c_n(n),
        w_mass: b.w_mass,
        c1: b.c1,
        c2: b.c2,
        e_w: 2.0 / nf * b.crit,
        c_tilde,
        blowup_exponent: expo,
    })
}

/// Quadrature values against their truncated closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub name: &'static str,
    pub quadrature: f64,
    pub truncated_closed_form: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub constants: Constants,
    pub checks: Vec<CrossCheck>,
    /// `|E_W − (2/N)∫|ΔW|²| / E_W`
    pub energy_identity: f64,
    /// residual of `2C̃/(N−12) = C₁C̃^{(N−10)/2}/(2∥W∥²)`
    pub c_tilde_residual: f64,
}

/// Effective truncation radius of the grid's quadrature.
pub fn quadrature_radius(grid: &RadialGrid) -> f64 {
    let phi_end = grid.h * grid.len() as f64;
    grid.scale() * phi_end.tan()
}

pub fn c_tilde_residual(c: &Constants) -> f64 {
    let nf = c.n as f64;
    let lhs = 2.0 * c.c_tilde / (nf - 12.0);
    let rhs = c.c1 * c.c_tilde.powf((nf - 10.0) / 2.0) / (2.0 * c.w_mass);
    (lhs - rhs).abs() / lhs.abs()
}

pub fn constants_compute(n: usize, grid: &RadialGrid) -> Result<ConstantsReport> {
    if grid.dim != n {
        return Err(config("N", n, "must match the grid dimension"));
    }
    let constants = constants_closed_form(n)?;
    let nf = n as f64;
    let w = w_real(grid, 1.0)?;
    let lw = lw_real(grid, 1.0)?;
    let p = p_exp(n);
    let wq: Vec<f64> = w.iter().map(|x| x.powf(1.0 + p)).collect();
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    let wc2: Vec<f64> = w.iter().zip(&lw).map(|(x, l)| (nf + 4.0) / (nf - 4.0) * x.powf(p) * l).collect();
    let crit: Vec<f64> = w.iter().map(|x| x.powf(2.0 + p)).collect();
    let rq = quadrature_radius(grid);
    let trunc = beta_integrals(n, rq);
    let full = beta_integrals(n, f64::INFINITY);
    let mut checks = Vec::new();
    let mut push = |name, q: f64, t: f64, f: f64| {
        checks.push(CrossCheck { name, quadrature: q, truncated_closed_form: t, closed_form: f, rel_err: (q - t).abs() / t.abs() })
    };
    push("W_mass", grid.integrate(&w2), trunc.w_mass, full.w_mass);
    push("C1", grid.integrate(&wq), trunc.c1, full.c1);
    push("C2", grid.integrate(&wc2), trunc.c2, full.c2);
    let crit_q = grid.integrate(&crit);
    push("E_W", 2.0 / nf * crit_q, 2.0 / nf * trunc.crit, constants.e_w);
    let lap = grid.laplacian(&w);
    let kin = grid.inner_real(&lap, &lap);
    let energy_identity = (2.0 / nf * kin - constants.e_w).abs() / constants.e_w;
    let c_tilde_residual = if n > 12 { c_tilde_residual(&constants) } else { f64::NAN };
    for c in &checks {
        if !(c.rel_err < 1e-6) {
            return Err(Error::Accuracy(format!("{}: quadrature {:.12e} vs closed form {:.12e}", c.name, c.quadrature, c.truncated_closed_form)));
        }
    }
    Ok(ConstantsReport { constants, checks, energy_identity, c_tilde_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct SobolevReport {
    pub max_ratio: f64,
    pub w_ratio: f64,
    pub argmax: String,
    pub ratios: Vec<(String, f64)>,
}

pub fn sobolev_ratio(u: &[C64], grid: &RadialGrid) -> f64 {
    let nf = grid.dim as f64;
    let q = 2.0 * nf / (nf - 4.0);
    let dens: Vec<f64> = u.iter().map(|z| z.norm().powf(q)).collect();
    let lq = grid.integrate(&dens).powf(1.0 / q);
    let lap = grid.laplacian(u);
    lq / grid.norm(&lap)
}

/// Sobolev quotient over a family of smooth radial test functions.
pub fn sobolev_check(grid: &Arc<RadialGrid>, samples: usize) -> Result<SobolevReport> {
    let n = grid.dim;
    let w = w_real(grid, 1.0)?;
    let to_c = |v: Vec<f64>| -> Vec<C64> { v.into_iter().map(|x| C64::new(x, 0.0)).collect() };
    let w_ratio = sobolev_ratio(&to_c(w.clone()), grid);
    let mut ratios = vec![("W".to_string(), w_ratio)];
    let k = samples.max(1);
    for i in 0..k {
        let s = i as f64 / k as f64;
        let a = 0.3 + 2.7 * s;
        ratios.push((format!("gauss({a:.3})"), sobolev_ratio(&to_c(grid.sample(|r| (-a * r * r).exp())), grid)));
        let b = (n as f64 - 4.0) / 2.0 + 0.25 + 2.0 * s;
        ratios.push((format!("algebraic({b:.3})"), sobolev_ratio(&to_c(grid.sample(|r| (1.0 + r * r).powf(-b))), grid)));
        let eps = 0.05 * (s - 0.5);
        let pert: Vec<f64> = grid.sample(|r| w_profile(n, r) * (1.0 + eps * (-r * r).exp()));
        ratios.push((format!("W*(1{eps:+.3}e^-r2)"), sobolev_ratio(&to_c(pert), grid)));
    }
    let (argmax, max_ratio) = ratios
        .iter()
        .cloned()
        .fold((String::new(), f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    Ok(SobolevReport { max_ratio, w_ratio, argmax, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::Grading;

    #[test]
    fn c13_value() {
        let c = c_n(13);
        assert!((c - 19305f64.powf(9.0 / 8.0)).abs() / c < 1e-15);
        assert!((c.powf(p_exp(13)) - 19305.0).abs() < 1e-8);
    }

    #[test]
    fn closed_forms() {
        let k = constants_closed_form(13).unwrap();
        assert_eq!(k.blowup_exponent, 2.0);
        assert!(k.c2 < 0.0);
        assert!(c_tilde_residual(&k) < 1e-12);
    }

    #[test]
    fn lambda_w_matches_generator() {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        let w = w_field(&g, 1.0).unwrap();
        let lw = lambda_generator(2.0, &w);
        let exact = lw_real(&g, 1.0).unwrap();
        for (j, r) in g.nodes().iter().enumerate() {
            if *r < 20.0 {
                assert!((lw.values[j].re - exact[j]).abs() < 1e-6 * c_n(13));
            }
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        let g = RadialGrid::build(13, 200.0, 128, Grading::default()).unwrap();
        assert!(w_field(&g, 0.0).is_err());
    }
}
