//! Adaptive Dormand-Prince 5(4) integrator for complex linear and nonlinear systems.

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, max_step: f64::INFINITY, initial_step: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = ZERO;
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[i] * *c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

fn error_norm(err: &[C64], y0: &[C64], y1: &[C64], o: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates y' = f(t, y) from `t0`, calling `observe(k, t_k, y)` at every requested output
/// time (ascending, all >= t0). Steps are clipped to land exactly on output times.
pub fn integrate<F, O>(f: F, t0: f64, y0: &[C64], outputs: &[f64], opts: &OdeOptions, observe: O) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    integrate_projected(f, |_| {}, t0, y0, outputs, opts, observe)
}

/// As [`integrate`], with `project` applied to the state after every accepted step. The last
/// stage derivative is reused for the next step, so `project` must commute with `f`
/// (e.g. Hermitian part of a density matrix under a Lindblad generator).
pub fn integrate_projected<F, P, O>(
    mut f: F,
    mut project: P,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    P: FnMut(&mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(Error::InvalidArgument("integrator tolerances must be positive".into()));
    }
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().map_or(false, |&t| t < t0) {
        return Err(Error::InvalidArgument("output times must be ascending and not before t0".into()));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = OdeStats::default();
    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut k5 = vec![ZERO; n];
    let mut k6 = vec![ZERO; n];
    let mut k7 = vec![ZERO; n];
    let mut ytmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    let mut err = vec![ZERO; n];
    f(t, &y, &mut k1);
    stats.rhs_evaluations += 1;

    let span = outputs.last().map_or(0.0, |&te| te - t0);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => {
            let scale: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.norm()).collect();
            let d0 = (y.iter().zip(&scale).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
            let d1 = (k1.iter().zip(&scale).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    };
    h = h.min(opts.max_step).min(span.max(f64::MIN_POSITIVE));

    for (k, &t_out) in outputs.iter().enumerate() {
        while t < t_out {
            let remaining = t_out - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-13 * t.abs().max(1.0) && !clipped {
                return Err(Error::Integration { time: t, reason: format!("step size underflow (h = {step:.3e})") });
            }
            combine(&mut ytmp, &y, step, &[(A21, &k1)]);
            f(t + C2 * step, &ytmp, &mut k2);
            combine(&mut ytmp, &y, step, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * step, &ytmp, &mut k3);
            combine(&mut ytmp, &y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * step, &ytmp, &mut k4);
            combine(&mut ytmp, &y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * step, &ytmp, &mut k5);
            combine(&mut ytmp, &y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + step, &ytmp, &mut k6);
            combine(&mut ynew, &y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            f(t + step, &ynew, &mut k7);
            stats.rhs_evaluations += 6;
            for i in 0..n {
                err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
            }
            let e = error_norm(&err, &y, &ynew, opts);
            if !e.is_finite() {
                return Err(Error::Integration { time: t, reason: "non-finite state".into() });
            }
            if e <= 1.0 {
                t = if clipped { t_out } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                project(&mut y);
                project(&mut k1);
                stats.accepted += 1;
                let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped step says nothing about the natural step length
                if !clipped || step * fac < h {
                    h = (step * fac).min(opts.max_step);
                }
            } else {
                stats.rejected += 1;
                h = (step * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0)).min(opts.max_step);
                if h < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::Integration { time: t, reason: format!("step size underflow (h = {h:.3e})") });
                }
            }
        }
        observe(k, t, &y)?;
    }
    Ok(stats)
}
