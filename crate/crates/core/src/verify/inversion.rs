//! Desk-scale inversion of a circular velocity anomaly.

use serde::Serialize;

use crate::error::Result;
use crate::seismic::{circle_velocity, fwi, model_shots, DampingProfile, FwiOptions, FwiRecord, Geometry, Model};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionConfig {
    /// Physical points per axis.
    pub n: usize,
    pub spacing: f64,
    pub nbl: usize,
    pub order: usize,
    pub v_background: f64,
    pub v_anomaly: f64,
    /// Anomaly radius in grid points.
    pub radius: f64,
    pub nsrc: usize,
    pub f0: f64,
    pub tn: f64,
    pub iterations: usize,
    /// Largest per-iteration change of `m` as a fraction of `|m_true − m0|_max`.
    pub step_fraction: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            n: 51,
            spacing: 10.0,
            nbl: 20,
            order: 4,
            v_background: 2000.0,
            v_anomaly: 2200.0,
            radius: 8.0,
            nsrc: 3,
            f0: 10.0,
            tn: 0.5,
            iterations: 15,
            step_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionReport {
    pub config: InversionConfig,
    pub history: Vec<FwiRecord>,
    pub objective_ratio: f64,
    pub initial_rms: f64,
    pub final_rms: f64,
}

/// Crosswell geometry: sources down the left edge, receivers down the right edge.
pub fn inversion_experiment(cfg: &InversionConfig) -> Result<(Model, Model, Geometry)> {
    let shape = [cfg.n, cfg.n];
    let spacing = [cfg.spacing; 2];
    let origin = [0.0; 2];
    let c = (cfg.n - 1) as f64 / 2.0;
    let vp = circle_velocity(&shape, &[c, c], cfg.radius, cfg.v_background, cfg.v_anomaly);
    let truth = Model::from_velocity(&vp, &spacing, &origin, cfg.nbl, cfg.order, DampingProfile::default())?;
    let m0 = truth.with_m(Model::constant(&shape, &spacing, &origin, cfg.v_background, cfg.nbl, cfg.order)?.m)?;
    let ext = (cfg.n - 1) as f64 * cfg.spacing;
    let src = (0..cfg.nsrc)
        .map(|i| vec![2.0 * cfg.spacing, ext * (i + 1) as f64 / (cfg.nsrc + 1) as f64])
        .collect();
    let rec = (0..cfg.n).map(|i| vec![ext - 2.0 * cfg.spacing, i as f64 * cfg.spacing]).collect();
    let dt = 0.8 * truth.critical_dt().min(m0.critical_dt());
    let geom = Geometry::ricker(src, rec, 0.0, cfg.tn, dt, cfg.f0)?;
    Ok((truth, m0, geom))
}

pub fn inversion_test(cfg: &InversionConfig) -> Result<InversionReport> {
    let (truth, m0, geom) = inversion_experiment(cfg)?;
    let shots = model_shots(&truth, &geom)?;
    let dm = truth.m.as_slice().iter().zip(m0.m.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (lo, hi) = (cfg.v_background.min(cfg.v_anomaly), cfg.v_background.max(cfg.v_anomaly));
    let opts = FwiOptions {
        iterations: cfg.iterations,
        step: cfg.step_fraction * dm,
        m_min: 1.0 / (1.5 * hi).powi(2),
        m_max: 1.0 / (lo / 1.5).powi(2),
    };
    let res = fwi(&m0, &shots, &opts, Some(&truth))?;
    let first = &res.history[0];
    let last = res.history.last().expect("history has iterations + 1 records");
    Ok(InversionReport {
        config: cfg.clone(),
        objective_ratio: last.objective / first.objective,
        initial_rms: first.model_error.unwrap_or(f64::NAN),
        final_rms: last.model_error.unwrap_or(f64::NAN),
        history: res.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inversion_reduces_misfit_and_error() {
        let cfg = InversionConfig { n: 31, nbl: 10, radius: 5.0, nsrc: 2, tn: 0.35, iterations: 4, ..Default::default() };
        let r = inversion_test(&cfg).unwrap();
        assert_eq!(r.history.len(), 5);
        assert!(r.objective_ratio < 0.8, "{}", r.objective_ratio);
        assert!(r.final_rms < r.initial_rms);
    }
}
