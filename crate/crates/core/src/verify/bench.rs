//! Roofline-style performance accounting of the acoustic kernel.

use serde::Serialize;

use crate::backend::{ExecOptions, Precision};
use crate::error::{Result, SfError};
use crate::seismic::{AcousticSolver, Geometry, Model};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub orders: Vec<usize>,
    /// Physical grid shapes to time.
    pub shapes: Vec<Vec<usize>>,
    pub steps: usize,
    /// Timed repetitions; the fastest is reported.
    pub repeats: usize,
    pub parallel: bool,
    pub precision: Precision,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            orders: vec![4, 8, 12, 16],
            shapes: vec![vec![400, 400], vec![1131, 1131]],
            steps: 10,
            repeats: 3,
            parallel: false,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub order: usize,
    pub shape: Vec<usize>,
    pub steps: usize,
    pub oi: f64,
    pub flops_per_point: usize,
    pub bytes_per_point: usize,
    pub flops: u64,
    /// Seconds, fastest repetition.
    pub wall_time: f64,
    pub gflops: f64,
}

/// Constant-velocity acoustic propagation of order `order` on `shape`.
fn acoustic_solver(shape: &[usize], order: usize, steps: usize) -> Result<(Model, AcousticSolver)> {
    let nd = shape.len();
    let h = vec![10.0; nd];
    let model = Model::constant(shape, &h, &vec![0.0; nd], 2000.0, 0, order)?;
    let dt = 0.5 * model.critical_dt();
    let centre: Vec<f64> = shape.iter().map(|&n| (n / 2) as f64 * 10.0).collect();
    let geom = Geometry::ricker(vec![centre.clone()], vec![centre], 0.0, (steps + 1) as f64 * dt, dt, 15.0)?;
    let solver = AcousticSolver::new(&model, &geom)?;
    Ok((model, solver))
}

pub fn bench_one(order: usize, shape: &[usize], cfg: &BenchConfig) -> Result<BenchRow> {
    if cfg.steps == 0 || cfg.repeats == 0 {
        return Err(SfError::Config("bench needs steps >= 1 and repeats >= 1".into()));
    }
    let (model, mut solver) = acoustic_solver(shape, order, cfg.steps)?;
    solver.exec = ExecOptions { parallel: cfg.parallel, precision: cfg.precision, nan_check_interval: 0 };
    let meta = solver.forward_operator(false).meta.clone();
    let mut best: Option<crate::backend::ExecReport> = None;
    for _ in 0..cfg.repeats {
        let r = solver.forward(&model, false)?.report;
        if best.as_ref().is_none_or(|b| r.wall_time < b.wall_time) {
            best = Some(r);
        }
    }
    let r = best.expect("repeats >= 1");
    Ok(BenchRow {
        order,
        shape: shape.to_vec(),
        steps: r.steps,
        oi: meta.oi,
        flops_per_point: meta.flops_per_point,
        bytes_per_point: meta.bytes_per_point,
        flops: r.flops,
        wall_time: r.wall_time,
        gflops: r.gflops,
    })
}

/// One row per order and shape.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &k in &cfg.orders {
        for s in &cfg.shapes {
            rows.push(bench_one(k, s, cfg)?);
        }
    }
    Ok(rows)
}

/// Operational intensity from compiler metadata for each order.
pub fn oi_by_order(orders: &[usize], ndim: usize) -> Result<Vec<(usize, f64)>> {
    orders
        .iter()
        .map(|&k| {
            let (_, s) = acoustic_solver(&vec![2 * k + 4; ndim], k, 1)?;
            Ok((k, s.forward_operator(false).meta.oi))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub small: BenchRow,
    pub large: BenchRow,
    pub volume_ratio: f64,
    pub time_ratio: f64,
}

/// Wall-time ratio between two domain sizes at a fixed order.
pub fn volume_scaling(order: usize, small: &[usize], large: &[usize], cfg: &BenchConfig) -> Result<ScalingReport> {
    let a = bench_one(order, small, cfg)?;
    let b = bench_one(order, large, cfg)?;
    let vol = |s: &[usize]| s.iter().product::<usize>() as f64;
    Ok(ScalingReport {
        volume_ratio: vol(large) / vol(small),
        time_ratio: b.wall_time / a.wall_time,
        small: a,
        large: b,
    })
}
