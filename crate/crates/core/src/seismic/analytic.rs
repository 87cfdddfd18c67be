//! Bessel functions and the 2-D constant-velocity analytic solution.

use std::f64::consts::{FRAC_PI_4, PI};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::backend::Array;
use crate::error::{Result, SfError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Switch from the recurrence to the asymptotic expansion.
const ASYMPTOTIC_FROM: f64 = 25.0;
/// Zero-padding factor of the trace before transforming.
const PAD: usize = 8;
/// Default minimal period (s) of the transform, so the slowly decaying 2-D
/// tail of one period does not wrap into the next.
pub const DEFAULT_PERIOD: f64 = 256.0;

/// `(J0(x), Y0(x))` for `x > 0`.
fn j0_y0(x: f64) -> (f64, f64) {
    if x >= ASYMPTOTIC_FROM {
        asymptotic(x)
    } else {
        miller(x)
    }
}

/// Backward recurrence normalised by `1 = J0 + 2 Σ J_2k`, with the Neumann
/// series for Y0.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x as usize + 60) / 2);
    let (mut jp, mut j) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut ysum = 0.0;
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            norm += 2.0 * j;
            let s = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            ysum += s * j / (k / 2) as f64;
        }
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            ysum *= 1e-250;
        }
    }
    norm += j;
    let j0 = j / norm;
    let y0 = 2.0 / PI * ((x / 2.0).ln() + EULER_GAMMA) * j0 - 4.0 / PI * ysum / norm;
    (j0, y0)
}

/// Hankel asymptotic expansion for large arguments.
fn asymptotic(x: f64) -> (f64, f64) {
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200usize {
        if k > 0 {
            let t = (2 * k - 1) as f64;
            a *= t * t / (8.0 * k as f64 * x);
        }
        if a > prev || a < 1e-18 {
            break;
        }
        prev = a;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q -= sign * a;
        }
    }
    let chi = x - FRAC_PI_4;
    let s = (2.0 / (PI * x)).sqrt();
    (s * (p * chi.cos() - q * chi.sin()), s * (p * chi.sin() + q * chi.cos()))
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        1.0
    } else {
        j0_y0(x).0
    }
}

/// Bessel function of the second kind, order zero; `-inf` at 0, NaN below.
pub fn bessel_y0(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 0.0 || x.is_nan() {
        f64::NAN
    } else {
        j0_y0(x).1
    }
}

/// `H0^(2)(x) = J0(x) − i Y0(x)`.
pub fn hankel2_0(x: f64) -> Complex64 {
    let (j, y) = j0_y0(x);
    Complex64::new(j, -y)
}

/// Time discretisation the analytic solution is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeReference {
    /// Exact wave equation.
    Continuous,
    /// Exact solution of the second-order leapfrog in time (continuous in
    /// space): frequencies enter as `(2/dt) sin(ω dt / 2)`.
    Discrete,
}

/// Traces `[nt, nrec]` of `m u_tt − Δu = q(t) δ(x − x_s)` in an unbounded 2-D
/// medium of velocity `vp`, for a source trace `src` sampled every `dt`.
pub fn analytic_2d(
    vp: f64,
    src_coord: &[f64],
    rec_coords: &[Vec<f64>],
    src: &[f64],
    dt: f64,
    reference: TimeReference,
) -> Result<Array> {
    analytic_2d_with_period(vp, src_coord, rec_coords, src, dt, reference, DEFAULT_PERIOD)
}

/// [`analytic_2d`] with an explicit minimal transform period (s).
pub fn analytic_2d_with_period(
    vp: f64,
    src_coord: &[f64],
    rec_coords: &[Vec<f64>],
    src: &[f64],
    dt: f64,
    reference: TimeReference,
    period: f64,
) -> Result<Array> {
    if src_coord.len() != 2 || rec_coords.iter().any(|r| r.len() != 2) {
        return Err(SfError::Parameter("analytic solution is 2-D".into()));
    }
    if !(vp > 0.0 && dt > 0.0) {
        return Err(SfError::Parameter("velocity and dt must be positive".into()));
    }
    let nt = src.len();
    let nrec = rec_coords.len();
    let n = (PAD * nt).max((period / dt).ceil() as usize).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut q: Vec<Complex64> = src.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    q.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut q);

    let mut out = Array::zeros(&[nt, nrec]);
    for (ir, rc) in rec_coords.iter().enumerate() {
        let r = ((rc[0] - src_coord[0]).powi(2) + (rc[1] - src_coord[1]).powi(2)).sqrt();
        if r == 0.0 {
            return Err(SfError::Singular(format!("receiver {ir} coincides with the source")));
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..n / 2 {
            let w = 2.0 * PI * k as f64 / (n as f64 * dt);
            let w = match reference {
                TimeReference::Continuous => w,
                TimeReference::Discrete => 2.0 / dt * (w * dt / 2.0).sin(),
            };
            let g = Complex64::new(0.0, -0.25) * hankel2_0(w * r / vp);
            spec[k] = g * q[k];
            spec[n - k] = spec[k].conj();
        }
        inv.process(&mut spec);
        for t in 0..nt {
            out.as_mut_slice()[t * nrec + ir] = spec[t].re / n as f64;
        }
    }
    Ok(out)
}
