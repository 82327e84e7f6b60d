//! Radial grids on a tangent-mapped mesh with eighth-order stencils.
//!
//! Nodes sit at `r_j = L tan(φ_j)` with `φ_j = (j + ½)h`. Operators are stored
//! in the symmetrized variable `v = √w u`, where the weighted inner product
//! becomes the Euclidean one and the discrete Laplacian is a symmetric band.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::banded::Band;
use crate::error::{config, Result};

pub const D2: [f64; 9] = [
    -9.0 / 5040.0,
    128.0 / 5040.0,
    -1008.0 / 5040.0,
    8064.0 / 5040.0,
    -14350.0 / 5040.0,
    8064.0 / 5040.0,
    -1008.0 / 5040.0,
    128.0 / 5040.0,
    -9.0 / 5040.0,
];

pub const D1: [f64; 9] = [
    1.0 / 280.0,
    -4.0 / 105.0,
    1.0 / 5.0,
    -4.0 / 5.0,
    0.0,
    4.0 / 5.0,
    -1.0 / 5.0,
    4.0 / 105.0,
    -1.0 / 280.0,
];

const HALF: usize = 4;

/// Node-mapping law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    /// `r = scale · tan φ`
    Tangent { scale: f64 },
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Tangent { scale: 1.0 }
    }
}

/// Anything the real stencils can act on.
pub trait Sample:
    Copy
    + Default
    + Send
    + Sync
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
}
impl Sample for f64 {}
impl Sample for C64 {}

#[derive(Debug)]
pub struct RadialGrid {
    pub dim: usize,
    pub r_max: f64,
    pub grading: Grading,
    pub h: f64,
    pub sphere_area: f64,
    r: Vec<f64>,
    rp: Vec<f64>,
    w: Vec<f64>,
    sw: Vec<f64>,
    lap: Band,
    bilap: Band,
}

pub fn sphere_area(dim: usize) -> f64 {
    let a = dim as f64 / 2.0;
    2.0 * PI.powf(a) / statrs::function::gamma::gamma(a)
}

fn fold(k: isize, n: usize) -> Option<usize> {
    let k = if k < 0 { -1 - k } else { k };
    if (k as usize) < n {
        Some(k as usize)
    } else {
        None
    }
}

impl RadialGrid {
    pub fn build(dim: usize, r_max: f64, n: usize, grading: Grading) -> Result<Arc<RadialGrid>> {
        if dim < 13 {
            return Err(config("N", dim, "integer >= 13"));
        }
        if n < 64 {
            return Err(config("n_nodes", n, "integer >= 64"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(config("r_max", r_max, "positive finite real"));
        }
        let Grading::Tangent { scale } = grading;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(config("grading.scale", scale, "positive finite real"));
        }
        let nd = dim as f64;
        let phi_max = (r_max / scale).atan();
        let h = phi_max / (n as f64 - 0.5);
        let area = sphere_area(dim);
        let mut r = Vec::with_capacity(n);
        let mut rp = Vec::with_capacity(n);
        for j in 0..n {
            let p = (j as f64 + 0.5) * h;
            r.push(scale * p.tan());
            rp.push(scale / (p.cos() * p.cos()));
        }
        let w: Vec<f64> = (0..n).map(|j| area * r[j].powf(nd - 1.0) * rp[j] * h).collect();
        let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();

        // second difference in φ with even reflection at the origin and zero ghosts at the end
        let mut a = Band::zeros(n, HALF, HALF);
        let ih2 = 1.0 / (h * h);
        for j in 0..n {
            for (i, c) in D2.iter().enumerate() {
                if let Some(k) = fold(j as isize + i as isize - HALF as isize, n) {
                    a.add(j, k, c * ih2);
                }
            }
        }
        // Liouville form: Δu = P^{1/2} (A - V) P^{1/2} u / J with P = r^{N-1}/r', J = r^{N-1} r'
        let sp: Vec<f64> = (0..n).map(|j| (r[j].powf(nd - 1.0) / rp[j]).sqrt()).collect();
        let harm: Vec<f64> = (0..n).map(|j| sp[j] * r[j].powf(2.0 - nd)).collect();
        let a_sp = a.matvec(&sp);
        let a_harm = a.matvec(&harm);
        let mut lap = a;
        for j in 0..n {
            let v = if r[j] < scale { a_sp[j] / sp[j] } else { a_harm[j] / harm[j] };
            lap.add(j, j, -v);
        }
        for j in 0..n {
            for k in lap.cols(j) {
                let v = lap.get(j, k) / (rp[j] * rp[k]);
                lap.set(j, k, v);
            }
        }
        let bilap = lap.mul(&lap);
        Ok(Arc::new(RadialGrid { dim, r_max, grading, h, sphere_area: area, r, rp, w, sw, lap, bilap }))
    }

    pub fn default_for(dim: usize) -> Result<Arc<RadialGrid>> {
        RadialGrid::build(dim, 200.0, 2048, Grading::default())
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sw
    }

    /// dr/dφ at the nodes.
    pub fn jacobian(&self) -> &[f64] {
        &self.rp
    }

    /// Symmetrized Laplacian band.
    pub fn lap_band(&self) -> &Band {
        &self.lap
    }

    /// Symmetrized bi-Laplacian band.
    pub fn bilap_band(&self) -> &Band {
        &self.bilap
    }

    pub fn scale(&self) -> f64 {
        let Grading::Tangent { scale } = self.grading;
        scale
    }

    pub fn integrate<T: Sample>(&self, f: &[T]) -> T {
        assert_eq!(f.len(), self.len(), "field/grid length mismatch");
        f.iter().zip(&self.w).fold(T::default(), |s, (v, w)| s + *v * *w)
    }

    /// `ℜ ∫ v̄ w`
    pub fn inner(&self, v: &[C64], w: &[C64]) -> f64 {
        assert_eq!(v.len(), self.len(), "field/grid length mismatch");
        assert_eq!(w.len(), self.len(), "field/grid length mismatch");
        v.iter().zip(w).zip(&self.w).map(|((a, b), q)| (a.re * b.re + a.im * b.im) * q).sum()
    }

    pub fn inner_real(&self, v: &[f64], w: &[f64]) -> f64 {
        assert_eq!(v.len(), self.len(), "field/grid length mismatch");
        v.iter().zip(w).zip(&self.w).map(|((a, b), q)| a * b * q).sum()
    }

    pub fn norm(&self, v: &[C64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn to_sym<T: Sample>(&self, u: &[T]) -> Vec<T> {
        u.iter().zip(&self.sw).map(|(x, s)| *x * *s).collect()
    }

    pub fn from_sym<T: Sample>(&self, v: &[T]) -> Vec<T> {
        v.iter().zip(&self.sw).map(|(x, s)| *x * (1.0 / *s)).collect()
    }

    pub fn laplacian<T: Sample>(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.len(), "field/grid length mismatch");
        self.from_sym(&self.lap.matvec(&self.to_sym(u)))
    }

    pub fn bilaplacian<T: Sample>(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.len(), "field/grid length mismatch");
        let v = self.to_sym(u);
        let v = self.lap.matvec(&v);
        self.from_sym(&self.lap.matvec(&v))
    }

    /// ∂_r u for an even-in-φ sample.
    pub fn d_dr<T: Sample>(&self, u: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(u.len(), n, "field/grid length mismatch");
        let ih = 1.0 / self.h;
        (0..n)
            .map(|j| {
                let mut s = T::default();
                for (i, c) in D1.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    if let Some(k) = fold(j as isize + i as isize - HALF as isize, n) {
                        s = s + u[k] * *c;
                    }
                }
                s * (ih / self.rp[j])
            })
            .collect()
    }

    /// `Λ_s u = (N/2 − s) u + r ∂_r u`
    pub fn lambda_s<T: Sample>(&self, s: f64, u: &[T]) -> Vec<T> {
        let du = self.d_dr(u);
        let a = self.dim as f64 / 2.0 - s;
        u.iter().zip(&du).zip(&self.r).map(|((x, d), r)| *x * a + *d * *r).collect()
    }

    /// Eight-point Lagrange interpolation in φ; zero past `r_max`.
    pub fn interpolate<T: Sample>(&self, u: &[T], r: f64) -> T {
        let n = self.len();
        let scale = self.scale();
        let x = (r / scale).atan() / self.h - 0.5;
        if x > n as f64 - 0.5 {
            return T::default();
        }
        let base = x.floor() as isize - 3;
        let mut s = T::default();
        for m in 0..8 {
            let k = base + m;
            let mut l = 1.0;
            for q in 0..8 {
                if q != m {
                    l *= (x - (base + q) as f64) / (m - q) as f64;
                }
            }
            if let Some(kk) = fold(k, n) {
                s = s + u[kk] * l;
            }
        }
        s
    }

    pub fn sample<T, F: Fn(f64) -> T>(&self, f: F) -> Vec<T> {
        self.r.iter().map(|&r| f(r)).collect()
    }
}

/// Complex radial field tied to a grid.
#[derive(Clone, Debug)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<C64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<C64>) -> Self {
        assert_eq!(grid.len(), values.len(), "field/grid length mismatch");
        RadialField { grid, values }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialField { grid, values: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_fn<F: Fn(f64) -> C64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let values = grid.sample(f);
        RadialField { grid, values }
    }

    pub fn from_real(grid: Arc<RadialGrid>, v: &[f64]) -> Self {
        let values = v.iter().map(|x| C64::new(*x, 0.0)).collect();
        RadialField::new(grid, values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn same_grid(&self, other: &RadialField) {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "fields live on different grids");
    }

    pub fn integrate(&self) -> C64 {
        self.grid.integrate(&self.values)
    }

    pub fn inner(&self, other: &RadialField) -> f64 {
        self.same_grid(other);
        self.grid.inner(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.values)
    }

    /// `(∫|Δu|²)^{1/2}`
    pub fn energy_norm(&self) -> f64 {
        let d = self.grid.laplacian(&self.values);
        self.grid.norm(&d)
    }

    pub fn laplacian(&self) -> RadialField {
        RadialField::new(self.grid.clone(), self.grid.laplacian(&self.values))
    }

    pub fn bilaplacian(&self) -> RadialField {
        RadialField::new(self.grid.clone(), self.grid.bilaplacian(&self.values))
    }

    pub fn map<F: Fn(f64, C64) -> C64>(&self, f: F) -> RadialField {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(r, z)| f(*r, *z)).collect();
        RadialField::new(self.grid.clone(), values)
    }

    pub fn scale(&self, a: C64) -> RadialField {
        self.map(|_, z| z * a)
    }

    pub fn add(&self, other: &RadialField) -> RadialField {
        self.same_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        RadialField::new(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &RadialField) -> RadialField {
        self.same_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        RadialField::new(self.grid.clone(), values)
    }

    pub fn axpy(&mut self, a: C64, x: &RadialField) {
        self.same_grid(x);
        for (y, v) in self.values.iter_mut().zip(&x.values) {
            *y += a * v;
        }
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }
}

/// Discrete Δ or Δ².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOrder {
    Laplacian,
    Bilaplacian,
}

pub fn differential_apply(order: DiffOrder, field: &RadialField) -> RadialField {
    match order {
        DiffOrder::Laplacian => field.laplacian(),
        DiffOrder::Bilaplacian => field.bilaplacian(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            RadialGrid::build(13, 200.0, 0, Grading::default()),
            Err(crate::Error::Config { ref param, .. }) if param == "n_nodes"
        ));
        assert!(RadialGrid::build(13, -1.0, 128, Grading::default()).is_err());
        assert!(RadialGrid::build(9, 200.0, 128, Grading::default()).is_err());
    }

    #[test]
    fn nodes_and_weights() {
        let g = RadialGrid::build(13, 200.0, 2048, Grading::default()).unwrap();
        assert_eq!(g.len(), 2048);
        assert!(g.nodes()[0] < 1e-3);
        assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
        assert!((*g.nodes().last().unwrap() - 200.0).abs() < 1e-9);
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn lap_band_is_symmetric() {
        let g = RadialGrid::build(13, 200.0, 256, Grading::default()).unwrap();
        assert!(g.lap_band().asymmetry() < 1e-12);
        assert!(g.bilap_band().asymmetry() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_smooth_profile() {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        for r in [0.0, 0.013, 0.5, 1.7, 3.0] {
            let v: f64 = g.interpolate(&u, r);
            assert!((v - (-r * r).exp()).abs() < 1e-9, "{r} {v}");
        }
        let far: f64 = g.interpolate(&u, 500.0);
        assert_eq!(far, 0.0);
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = RadialGrid::build(13, 200.0, 1024, Grading::default()).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let du = g.d_dr(&u);
        for (j, r) in g.nodes().iter().enumerate() {
            if *r < 5.0 {
                assert!((du[j] + 2.0 * r * (-r * r).exp()).abs() < 1e-8);
            }
        }
    }
}
