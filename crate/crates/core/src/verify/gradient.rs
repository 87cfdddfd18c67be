//! Taylor test of the adjoint-state gradient.

use rayon::prelude::*;
use serde::Serialize;

use super::fit::SlopeFit;
use crate::backend::Array;
use crate::error::{Result, SfError};
use crate::seismic::{two_layer_velocity, AcousticSolver, DampingProfile, Geometry, Model};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientConfig {
    /// Physical points per axis of the 2-D model.
    pub n: usize,
    pub spacing: f64,
    pub nbl: usize,
    pub order: usize,
    pub v_top: f64,
    pub v_bottom: f64,
    /// Velocity of the constant starting model.
    pub v0: f64,
    pub f0: f64,
    pub tn: f64,
    /// Perturbation sizes, largest first.
    pub hs: Vec<f64>,
}

impl Default for GradientConfig {
    fn default() -> Self {
        GradientConfig {
            n: 61,
            spacing: 10.0,
            nbl: 20,
            order: 8,
            v_top: 1500.0,
            v_bottom: 1700.0,
            v0: 1500.0,
            f0: 10.0,
            tn: 0.6,
            hs: (0..=12).map(|i| 10f64.powf(-0.5 * i as f64)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorPoint {
    pub h: f64,
    /// `|Φ(m0 + h dm) − Φ(m0)|`
    pub eps0: f64,
    /// `|Φ(m0 + h dm) − Φ(m0) − h <g, dm>|`
    pub eps1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientReport {
    pub objective: f64,
    pub directional: f64,
    pub points: Vec<TaylorPoint>,
    pub fit0: SlopeFit,
    pub fit1: SlopeFit,
}

/// Objective at `m0`, directional derivative `<g, dm>` and Taylor remainders
/// of `Φ(m0 + h dm)` for each `h`.
pub fn taylor_sweep(
    solver: &AcousticSolver,
    m0: &Model,
    dm: &Array,
    obs: &Array,
    hs: &[f64],
) -> Result<(f64, f64, Vec<TaylorPoint>)> {
    let g = solver.objective_and_gradient(m0, obs)?;
    let directional: f64 = g.gradient.as_slice().iter().zip(dm.as_slice()).map(|(a, b)| a * b).sum();
    let phi0 = g.objective;
    let points = hs
        .par_iter()
        .map(|&h| {
            let m = m0.m.as_slice().iter().zip(dm.as_slice()).map(|(a, b)| a + h * b).collect();
            let phi = solver.objective(&m0.with_m(Array::from_vec(m0.m.shape(), m)?)?, obs)?;
            Ok(TaylorPoint { h, eps0: (phi - phi0).abs(), eps1: (phi - phi0 - h * directional).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((phi0, directional, points))
}

/// Expand the sweep from `m0` along `dm = m_true − m0` on a two-layer model.
pub fn gradient_test(cfg: &GradientConfig) -> Result<GradientReport> {
    let shape = [cfg.n, cfg.n];
    let spacing = [cfg.spacing; 2];
    let origin = [0.0; 2];
    let truth = Model::from_velocity(
        &two_layer_velocity(&shape, cfg.n / 2, cfg.v_top, cfg.v_bottom),
        &spacing,
        &origin,
        cfg.nbl,
        cfg.order,
        DampingProfile::default(),
    )?;
    let m0 = truth.with_m(Model::constant(&shape, &spacing, &origin, cfg.v0, cfg.nbl, cfg.order)?.m)?;
    let ext = (cfg.n - 1) as f64 * cfg.spacing;
    let src = vec![vec![ext / 2.0, 2.0 * cfg.spacing]];
    let rec = (0..cfg.n).map(|i| vec![i as f64 * cfg.spacing, 3.0 * cfg.spacing]).collect();
    let dt = 0.8 * truth.critical_dt().min(m0.critical_dt());
    let geom = Geometry::ricker(src, rec, 0.0, cfg.tn, dt, cfg.f0)?;
    let solver = AcousticSolver::new(&truth, &geom)?;
    let obs = solver.forward(&truth, false)?.traces;
    let dm: Vec<f64> = truth.m.as_slice().iter().zip(m0.m.as_slice()).map(|(a, b)| a - b).collect();
    let dm = Array::from_vec(m0.m.shape(), dm)?;
    let (phi0, directional, points) = taylor_sweep(&solver, &m0, &dm, &obs, &cfg.hs)?;
    if points.iter().any(|p| p.eps0 == 0.0 || p.eps1 == 0.0) {
        return Err(SfError::Fit("Taylor remainders vanished; the perturbation has no effect".into()));
    }
    let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    let fit0 = SlopeFit::fit(&hs, &points.iter().map(|p| p.eps0).collect::<Vec<_>>())?;
    let fit1 = SlopeFit::fit(&hs, &points.iter().map(|p| p.eps1).collect::<Vec<_>>())?;
    Ok(GradientReport { objective: phi0, directional, points, fit0, fit1 })
}
