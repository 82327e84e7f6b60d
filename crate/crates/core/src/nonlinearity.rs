//! The critical nonlinearity `f(z) = |z|^{8/(N−4)} z`, its potential and
//! real-linear derivative, and sampled validators for the Taylor bounds.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{config, Error, Result};

fn p_of(n: usize) -> f64 {
    8.0 / (n as f64 - 4.0)
}

pub fn f_eval(z: C64, n: usize) -> C64 {
    let a = z.norm();
    if a == 0.0 {
        return C64::new(0.0, 0.0);
    }
    z * a.powf(p_of(n))
}

pub fn big_f(z: C64, n: usize) -> f64 {
    let p = p_of(n);
    z.norm().powf(p + 2.0) / (p + 2.0)
}

/// `f′(z)z₁ = |z|^p (z₁ + p z ℜ(z₁/z))`, zero at `z = 0`.
pub fn fprime_apply(z: C64, z1: C64, n: usize) -> C64 {
    let a = z.norm();
    if a == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let p = p_of(n);
    let u = z / a;
    a.powf(p) * (z1 + p * u * (u.conj() * z1).re)
}

/// Operator norm of the real-linear map `f′(z)`.
pub fn fprime_norm(z: C64, n: usize) -> f64 {
    let p = p_of(n);
    z.norm().powf(p) * (1.0 + p)
}

/// `f′(z)` as a real 2×2 matrix acting on `(ℜw, ℑw)`.
pub fn fprime_matrix(z: C64, n: usize) -> [[f64; 2]; 2] {
    let a = z.norm();
    if a == 0.0 {
        return [[0.0; 2]; 2];
    }
    let p = p_of(n);
    let s = a.powf(p);
    let (x, y) = (z.re / a, z.im / a);
    [[s * (1.0 + p * x * x), s * p * x * y], [s * p * x * y, s * (1.0 + p * y * y)]]
}

fn spectral_norm2(m: [[f64; 2]; 2]) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InequalityId {
    #[serde(rename = "2.7a")]
    I27a,
    #[serde(rename = "2.7b")]
    I27b,
    #[serde(rename = "2.8")]
    I28,
    #[serde(rename = "2.9")]
    I29,
    #[serde(rename = "2.10")]
    I210,
    #[serde(rename = "2.11")]
    I211,
    #[serde(rename = "2.12")]
    I212,
}

impl InequalityId {
    pub const ALL: [InequalityId; 7] = [
        InequalityId::I27a,
        InequalityId::I27b,
        InequalityId::I28,
        InequalityId::I29,
        InequalityId::I210,
        InequalityId::I211,
        InequalityId::I212,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::I27a => "2.7a",
            InequalityId::I27b => "2.7b",
            InequalityId::I28 => "2.8",
            InequalityId::I29 => "2.9",
            InequalityId::I210 => "2.10",
            InequalityId::I211 => "2.11",
            InequalityId::I212 => "2.12",
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InequalityId::ALL
            .iter()
            .copied()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| config("inequality_id", s, "one of 2.7a, 2.7b, 2.8, 2.9, 2.10, 2.11, 2.12"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub inequality_id: InequalityId,
    pub n: usize,
    pub n_samples: usize,
    pub fitted_constant: f64,
    pub worst_case: ((f64, f64), (f64, f64)),
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

fn gauss01<T, F>(g: F) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    F: Fn(f64) -> T,
{
    GL8.iter().fold(T::default(), |s, (x, w)| s + g(0.5 * (x + 1.0)) * (0.5 * w))
}

const SMALL: f64 = 0.3;

/// Ratio LHS/RHS at `z₁ = 1, z₂ = ζ`; every inequality is invariant under
/// joint rotation and scaling, so this is the general case.
fn ratio(id: InequalityId, zeta: C64, n: usize) -> Option<f64> {
    let p = p_of(n);
    let q = p + 1.0;
    let m = zeta.norm();
    if m == 0.0 {
        return None;
    }
    let one = C64::new(1.0, 0.0);
    let a = zeta.re;
    let b = m * m;
    let u = |t: f64| 1.0 + 2.0 * t * a + t * t * b;
    let du = |t: f64| 2.0 * a + 2.0 * t * b;
    let hp = p / 2.0;
    // second t-derivative of f(1 + tζ)
    let f2 = |t: f64| -> C64 {
        let uu = u(t);
        let z = one + zeta * t;
        z * (hp * (hp - 1.0) * uu.powf(hp - 2.0) * du(t).powi(2) + hp * uu.powf(hp - 1.0) * 2.0 * b)
            + zeta * (2.0 * hp * uu.powf(hp - 1.0) * du(t))
    };
    let taylor_f2 = || -> C64 {
        if m < SMALL {
            gauss01(|t| f2(t) * (1.0 - t))
        } else {
            f_eval(one + zeta, n) - one - fprime_apply(one, zeta, n)
        }
    };
    let (lhs, rhs) = match id {
        InequalityId::I27a | InequalityId::I27b => {
            let a1 = fprime_matrix(one + zeta, n);
            let a0 = fprime_matrix(one, n);
            let d = [[a1[0][0] - a0[0][0], a1[0][1] - a0[0][1]], [a1[1][0] - a0[1][0], a1[1][1] - a0[1][1]]];
            let lhs = spectral_norm2(d);
            let rhs = if id == InequalityId::I27a { fprime_norm(zeta, n) } else { m };
            (lhs, rhs)
        }
        InequalityId::I28 => ((f_eval(one + zeta, n) - one).norm(), fprime_norm(one, n) * m + m.powf(q)),
        InequalityId::I29 => (taylor_f2().norm(), m.powf(q)),
        InequalityId::I210 => (taylor_f2().norm(), m * m),
        InequalityId::I211 | InequalityId::I212 => {
            let fu = |t: f64| u(t);
            let lhs = if id == InequalityId::I211 {
                if m < SMALL {
                    gauss01(|t| 0.5 * (hp * fu(t).powf(hp - 1.0) * du(t).powi(2) + fu(t).powf(hp) * 2.0 * b) * (1.0 - t))
                } else {
                    big_f(one + zeta, n) - big_f(one, n) - (f_eval(one, n).conj() * zeta).re
                }
            } else if m < SMALL {
                gauss01(|t| {
                    0.5 * (hp * (hp - 1.0) * fu(t).powf(hp - 2.0) * du(t).powi(3) + 3.0 * hp * fu(t).powf(hp - 1.0) * du(t) * 2.0 * b)
                        * 0.5
                        * (1.0 - t)
                        * (1.0 - t)
                })
            } else {
                big_f(one + zeta, n)
                    - big_f(one, n)
                    - (f_eval(one, n).conj() * zeta).re
                    - 0.5 * (fprime_apply(one, zeta, n).conj() * zeta).re
            };
            let rhs = if id == InequalityId::I211 { fprime_norm(one, n) * m * m + big_f(zeta, n) } else { big_f(zeta, n) };
            (lhs.abs(), rhs)
        }
    };
    if rhs > 0.0 && rhs.is_finite() && lhs.is_finite() {
        Some(lhs / rhs)
    } else {
        None
    }
}

/// Samples `(z₁, z₂)` with log-uniform magnitudes in `[1e−4, 1e4]` and uniform
/// phases and returns the largest observed LHS/RHS.
pub fn lemma21_check(id: InequalityId, n_samples: usize, seed: u64, n: usize) -> Result<InequalityReport> {
    if n < 13 {
        return Err(config("N", n, "integer >= 13"));
    }
    if n_samples == 0 {
        return Err(config("n_samples", n_samples, "positive integer"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ln = 1e4f64.ln();
    let mut best = 0.0f64;
    let mut worst = ((0.0, 0.0), (0.0, 0.0));
    for _ in 0..n_samples {
        let r1 = (rng.random_range(-ln..ln)).exp();
        let r2 = (rng.random_range(-ln..ln)).exp();
        let a1 = rng.random_range(0.0..std::f64::consts::TAU);
        let a2 = rng.random_range(0.0..std::f64::consts::TAU);
        let z1 = C64::from_polar(r1, a1);
        let z2 = C64::from_polar(r2, a2);
        if let Some(v) = ratio(id, z2 / z1, n) {
            if v > best {
                best = v;
                worst = ((z1.re, z1.im), (z2.re, z2.im));
            }
        }
    }
    if !(best > 0.0 && best.is_finite()) {
        return Err(Error::Numerical(format!("inequality {id}: no finite positive ratio")));
    }
    Ok(InequalityReport { inequality_id: id, n, n_samples, fitted_constant: best, worst_case: worst })
}

/// LHS/RHS at a single pair, for diagnostics.
pub fn lemma21_ratio(id: InequalityId, z1: C64, z2: C64, n: usize) -> Option<f64> {
    if z1.norm() == 0.0 {
        return None;
    }
    ratio(id, z2 / z1, n)
}
