//! Numerical-versus-analytic convergence sweeps in time and space.

use rayon::prelude::*;
use serde::Serialize;

use super::fit::SlopeFit;
use crate::backend::{Array, ExecOptions};
use crate::error::{Result, SfError};
use crate::seismic::analytic::DEFAULT_PERIOD;
use crate::seismic::{
    analytic_2d_with_period, ricker_delayed, sample_count, AcousticSolver, Geometry, Model, TimeReference,
};

/// One constant-velocity 2-D experiment compared against the analytic solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    /// Side of the square domain (m); the source sits at its centre.
    pub extent: f64,
    pub vp: f64,
    /// Ricker peak frequency (Hz).
    pub f0: f64,
    /// Ricker delay in periods `1/f0`.
    pub delay_periods: f64,
    /// Propagation time (s).
    pub tn: f64,
    /// Receiver offsets from the source (m).
    pub offsets: Vec<[f64; 2]>,
}

impl Experiment {
    fn setup(&self, dt: f64) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let c = self.extent / 2.0;
        let src = vec![c, c];
        let recs = self.offsets.iter().map(|o| vec![c + o[0], c + o[1]]).collect();
        let nt = sample_count(0.0, self.tn, dt);
        let times: Vec<f64> = (0..nt).map(|i| i as f64 * dt).collect();
        let mut q = ricker_delayed(self.f0, self.delay_periods / self.f0, &times);
        // Only samples 1..=nt-2 are injected; the reference must see the same input.
        q[0] = 0.0;
        q[nt - 1] = 0.0;
        (src, recs, q)
    }

    /// Reference traces `[nt, nrec]` for a point source of unit strength.
    pub fn reference(&self, dt: f64, reference: TimeReference, period: f64) -> Result<Array> {
        let (src, recs, q) = self.setup(dt);
        analytic_2d_with_period(self.vp, &src, &recs, &q, dt, reference, period)
    }

    /// Numerical traces `[nt, nrec]` of the order-`order` scheme at spacing `h`.
    pub fn numerical(&self, h: f64, order: usize, dt: f64) -> Result<Array> {
        let n = (self.extent / h).round() as usize + 1;
        if ((n - 1) as f64 * h - self.extent).abs() > 1e-9 * self.extent {
            return Err(SfError::Config(format!("spacing {h} does not divide the extent {}", self.extent)));
        }
        let model = Model::constant(&[n, n], &[h, h], &[0.0, 0.0], self.vp, 0, order)?;
        let (src, recs, q) = self.setup(dt);
        let nt = q.len();
        let geom = Geometry::with_traces(vec![src], recs, 0.0, self.tn, dt, Array::from_vec(&[nt, 1], q)?)?;
        let mut solver = AcousticSolver::new(&model, &geom)?;
        solver.exec = ExecOptions::serial();
        let mut traces = solver.forward(&model, false)?.traces;
        // A grid source of strength q carries q·h² of a point source.
        for v in traces.as_mut_slice() {
            *v /= h * h;
        }
        Ok(traces)
    }

    /// Relative L2 trace error of the order-`order` scheme at spacing `h` and step `dt`.
    pub fn error(&self, h: f64, order: usize, dt: f64, reference: TimeReference) -> Result<f64> {
        let num = self.numerical(h, order, dt)?;
        let ana = self.reference(dt, reference, DEFAULT_PERIOD)?;
        Ok(relative_error(&num, &ana, self.offsets.len()))
    }
}

/// `‖a − b‖ / ‖b‖` over the modelled samples `1..=nt-2` of `[nt, nrec]` traces.
pub fn relative_error(a: &Array, b: &Array, nrec: usize) -> f64 {
    let nt = b.shape()[0];
    let (mut e, mut s) = (0.0, 0.0);
    for k in nrec..(nt - 1) * nrec {
        let r = b.as_slice()[k];
        e += (a.as_slice()[k] - r).powi(2);
        s += r * r;
    }
    (e / s).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub step: f64,
    pub error: f64,
    /// Whether the point entered the slope fit.
    pub fitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub order: usize,
    pub points: Vec<ConvergencePoint>,
    pub fit: SlopeFit,
    /// Error floor below which points are not fitted (0 when unused).
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConvergenceConfig {
    pub experiment: Experiment,
    pub h: f64,
    pub order: usize,
    /// Time steps (s), largest first.
    pub dts: Vec<f64>,
}

impl Default for TimeConvergenceConfig {
    fn default() -> Self {
        TimeConvergenceConfig {
            experiment: Experiment {
                extent: 400.0,
                vp: 1500.0,
                f0: 25.0,
                delay_periods: 2.0,
                tn: 0.150,
                offsets: vec![[50.0, 0.0], [0.0, -40.0], [30.0, 30.0]],
            },
            h: 2.0,
            order: 8,
            dts: vec![0.5e-3, 0.4e-3, 0.3e-3, 0.25e-3, 0.2e-3, 0.15e-3, 0.1e-3],
        }
    }
}

/// Error against the continuous-time analytic solution for each `dt`.
pub fn convergence_time(cfg: &TimeConvergenceConfig) -> Result<ConvergenceReport> {
    let errors = cfg
        .dts
        .par_iter()
        .map(|&dt| cfg.experiment.error(cfg.h, cfg.order, dt, TimeReference::Continuous))
        .collect::<Result<Vec<_>>>()?;
    let fit = SlopeFit::fit(&cfg.dts, &errors)?;
    let points = cfg.dts.iter().zip(&errors).map(|(&step, &error)| ConvergencePoint { step, error, fitted: true }).collect();
    Ok(ConvergenceReport { order: 2, points, fit, floor: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceConvergenceConfig {
    pub experiment: Experiment,
    pub orders: Vec<usize>,
    /// Grid spacings (m), largest first; each must divide the extent and offsets.
    pub spacings: Vec<f64>,
    /// Common time step (s).
    pub dt: f64,
    /// Points with error below this multiple of the floor are left out of the fit.
    pub floor_factor: f64,
}

impl Default for SpaceConvergenceConfig {
    fn default() -> Self {
        SpaceConvergenceConfig {
            experiment: Experiment {
                extent: 400.0,
                vp: 1500.0,
                f0: 20.0,
                delay_periods: 2.0,
                tn: 0.200,
                offsets: vec![[40.0, 0.0], [0.0, 40.0], [40.0, 40.0]],
            },
            orders: vec![2, 4, 6, 8, 10],
            spacings: vec![5.0, 4.0, 2.5, 2.0, 1.6, 1.25],
            dt: 0.25e-3,
            floor_factor: 10.0,
        }
    }
}

/// Accuracy floor of the reference used by the space sweep, estimated as its
/// change when the transform period is halved.
pub fn error_floor(cfg: &SpaceConvergenceConfig) -> Result<f64> {
    let e = &cfg.experiment;
    let fine = e.reference(cfg.dt, TimeReference::Discrete, DEFAULT_PERIOD)?;
    let coarse = e.reference(cfg.dt, TimeReference::Discrete, DEFAULT_PERIOD / 2.0)?;
    Ok(relative_error(&coarse, &fine, e.offsets.len()))
}

/// Error against the time-discrete analytic solution for each spacing and order.
pub fn convergence_space(cfg: &SpaceConvergenceConfig) -> Result<Vec<ConvergenceReport>> {
    let floor = error_floor(cfg)?;
    let jobs: Vec<(usize, f64)> = cfg.orders.iter().flat_map(|&k| cfg.spacings.iter().map(move |&h| (k, h))).collect();
    let errors = jobs
        .par_iter()
        .map(|&(k, h)| cfg.experiment.error(h, k, cfg.dt, TimeReference::Discrete))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (i, &k) in cfg.orders.iter().enumerate() {
        let errs = &errors[i * cfg.spacings.len()..(i + 1) * cfg.spacings.len()];
        let points: Vec<ConvergencePoint> = cfg
            .spacings
            .iter()
            .zip(errs)
            .map(|(&step, &error)| ConvergencePoint { step, error, fitted: error >= cfg.floor_factor * floor })
            .collect();
        let (hs, es): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.fitted).map(|p| (p.step, p.error)).unzip();
        let fit = SlopeFit::fit(&hs, &es)?;
        out.push(ConvergenceReport { order: k, points, fit, floor });
    }
    Ok(out)
}
