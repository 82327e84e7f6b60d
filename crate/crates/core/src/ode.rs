//! Adaptive Dormand–Prince 5(4) integration with exact output times.

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const BS: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-300 }
    }
}

#[derive(Clone, Debug)]
pub struct OdeRun {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
    pub rejected: usize,
    /// Set when integration stopped before the last output time.
    pub stopped: Option<String>,
}

/// Integrates `y′ = f(t, y)` forward from `t0` and records `y` at each of the
/// increasing `outputs`. `guard` may stop the run early with a reason.
pub fn dopri5<F, G>(f: F, t0: f64, y0: &[f64], outputs: &[f64], tol: Tolerance, guard: G) -> OdeRun
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    G: Fn(f64, &[f64]) -> Option<String>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut samples = Vec::with_capacity(outputs.len());
    let mut steps = 0;
    let mut rejected = 0;
    let span = outputs.last().map(|e| (e - t0).abs()).unwrap_or(0.0);
    let mut h = (span * 1e-4).max(f64::MIN_POSITIVE);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    for &target in outputs {
        if target < t {
            continue;
        }
        while t < target {
            if let Some(reason) = guard(t, &y) {
                return OdeRun { samples, steps, rejected, stopped: Some(reason) };
            }
            let last = target - t <= h;
            let hs = if last { target - t } else { h };
            k[0] = f(t, &y);
            let mut yt = vec![0.0; n];
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        acc += hs * A[s][j] * k[j][i];
                    }
                    yt[i] = acc;
                }
                k[s] = f(t + C[s] * hs, &yt);
            }
            let mut err = 0.0;
            let mut ynew = vec![0.0; n];
            for i in 0..n {
                let mut hi = 0.0;
                let mut lo = 0.0;
                for s in 0..7 {
                    hi += B[s] * k[s][i];
                    lo += BS[s] * k[s][i];
                }
                ynew[i] = y[i] + hs * hi;
                let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
                err += (hs * (hi - lo) / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                if hs < 1e-14 * t.abs().max(1.0) {
                    return OdeRun { samples, steps, rejected, stopped: Some(format!("non-finite state at t = {t:e}")) };
                }
                h = hs * 0.1;
                rejected += 1;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = ynew;
                steps += 1;
                if !last {
                    h = hs * factor;
                }
            } else {
                h = hs * factor;
                rejected += 1;
            }
            if h < 1e-15 * t.abs().max(1e-300) {
                return OdeRun { samples, steps, rejected, stopped: Some(format!("step size underflow at t = {t:e}")) };
            }
        }
        samples.push((t, y.clone()));
    }
    OdeRun { samples, steps, rejected, stopped: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let run = dopri5(|_, y| vec![-y[0]], 0.0, &[1.0], &[0.5, 1.0, 2.0], Tolerance::default(), |_, _| None);
        for (t, y) in &run.samples {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let run = dopri5(|_, y| vec![y[1], -y[0]], 0.0, &[0.0, 1.0], &[10.0], Tolerance::default(), |_, _| None);
        let (_, y) = &run.samples[0];
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn guard_stops() {
        let run = dopri5(|_, y| vec![y[0]], 0.0, &[1.0], &[100.0], Tolerance::default(), |_, y| (y[0] > 1e3).then(|| "big".to_string()));
        assert_eq!(run.stopped.as_deref(), Some("big"));
    }
}
