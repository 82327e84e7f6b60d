//! Banded matrices with a partial-pivoting LU.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Real banded matrix, row-major band storage.
#[derive(Clone, Debug)]
pub struct Band {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Band { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && j < self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut s = T::default();
                for j in self.cols(i) {
                    s = s + x[j] * self.get(i, j);
                }
                s
            })
            .collect()
    }

    /// `Bx` with error-free products and sums, returned as `hi + lo`.
    pub fn matvec_compensated(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        assert_eq!(x.len(), self.n);
        let mut hi = Vec::with_capacity(self.n);
        let mut lo = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let (mut sr, mut cr, mut si, mut ci) = (0.0, 0.0, 0.0, 0.0);
            for j in self.cols(i) {
                let b = self.get(i, j);
                dot2_step(b, x[j].re, &mut sr, &mut cr);
                dot2_step(b, x[j].im, &mut si, &mut ci);
            }
            let (h, l) = (C64::new(sr, si), C64::new(cr, ci));
            hi.push(h + l);
            lo.push(l - ((h + l) - h));
        }
        (hi, lo)
    }

    /// Product of two banded matrices.
    pub fn mul(&self, other: &Band) -> Band {
        assert_eq!(self.n, other.n);
        let mut out = Band::zeros(self.n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.n {
            for k in self.cols(i) {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in other.cols(k) {
                    out.add(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in self.cols(i) {
                let a = self.get(i, j);
                let b = self.get(j, i);
                let s = a.abs().max(b.abs());
                if s > 0.0 {
                    worst = worst.max((a - b).abs() / s);
                }
            }
        }
        worst
    }
}

/// Complex banded matrix in the layout used by the LU factorization: `kl`
/// extra superdiagonals are reserved for fill-in from row pivoting.
#[derive(Clone, Debug)]
pub struct ComplexBand {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<C64>,
}

impl ComplexBand {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        ComplexBand { n, kl, ku, data: vec![C64::new(0.0, 0.0); n * (2 * kl + ku + 1)] }
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.kl - i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl >= i && j <= i + self.kl + self.ku && j < self.n {
            self.data[self.idx(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(j + self.kl >= i && j <= i + self.ku && j < self.n, "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn from_real(b: &Band, scale: C64, shift: C64) -> Self {
        let mut out = ComplexBand::zeros(b.n, b.kl, b.ku);
        for i in 0..b.n {
            for j in b.cols(i) {
                out.add(i, j, scale * b.get(i, j));
            }
            out.add(i, i, shift);
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU with partial pivoting, in place.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku2 = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut growth = 0.0f64;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Numerical(format!("singular banded matrix at pivot {k}")));
            }
            piv[k] = p;
            let jhi = (k + ku2).min(n - 1);
            if p != k {
                for j in k..=jhi {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let d = self.get(k, k);
            growth = growth.max(d.norm());
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let m = self.data[ik] / d;
                self.data[ik] = m;
                if m == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=jhi {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= m * kj;
                }
            }
        }
        Ok(BandLu { a: self, piv, growth })
    }
}

fn dot2_step(a: f64, b: f64, s: &mut f64, c: &mut f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    let t = *s + p;
    let z = t - *s;
    let q = (*s - (t - z)) + (p - z);
    *s = t;
    *c += q + e;
}

/// Factored banded system.
#[derive(Clone, Debug)]
pub struct BandLu {
    a: ComplexBand,
    piv: Vec<usize>,
    pub growth: f64,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.a.n;
        let kl = self.a.kl;
        let ku2 = self.a.kl + self.a.ku;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.a.data[self.a.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + ku2).min(n - 1) {
                s -= self.a.data[self.a.idx(k, j)] * b[j];
            }
            b[k] = s / self.a.data[self.a.idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_real(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<C64> = b.iter().map(|v| C64::new(*v, 0.0)).collect();
        self.solve_in_place(&mut x);
        x.into_iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lu_solves_random_band() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let mut a = ComplexBand::zeros(n, 3, 2);
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 3).min(n) {
                a.add(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x);
        let lu = a.clone().factor().unwrap();
        let y = lu.solve(&b);
        let err: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn band_product_matches_dense() {
        let mut a = Band::zeros(10, 1, 2);
        let mut b = Band::zeros(10, 2, 1);
        for i in 0..10 {
            for j in a.cols(i) {
                a.set(i, j, (i * 3 + j) as f64 * 0.1 - 1.0);
            }
            for j in b.cols(i) {
                b.set(i, j, (i + 2 * j) as f64 * 0.05 + 0.5);
            }
        }
        let c = a.mul(&b).to_dense();
        let d = a.to_dense() * b.to_dense();
        assert!((c - d).abs().max() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexBand::zeros(4, 1, 1);
        assert!(a.factor().is_err());
    }
}
