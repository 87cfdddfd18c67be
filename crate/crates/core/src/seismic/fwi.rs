//! Desk-scale full-waveform inversion by projected fixed-step descent.

use rayon::prelude::*;
use serde::Serialize;

use super::model::Model;
use super::operators::AcousticSolver;
use super::source::Geometry;
use crate::backend::Array;
use crate::compiler::CompileOptions;
use crate::error::{Result, SfError};

/// One source experiment with its observed receiver data `[nt, nrec]`.
#[derive(Debug, Clone)]
pub struct Shot {
    pub geometry: Geometry,
    pub observed: Array,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwiOptions {
    pub iterations: usize,
    /// Largest change of `m` (s²/m²) applied per iteration.
    pub step: f64,
    pub m_min: f64,
    pub m_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FwiRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    /// RMS of `m − m_true` over the physical domain, when the truth is known.
    pub model_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FwiResult {
    pub model: Model,
    /// Squared slowness after each iteration, starting with the initial model.
    pub trajectory: Vec<Array>,
    pub history: Vec<FwiRecord>,
}

/// Synthetic observed data for every source of `geometry` in `model`.
pub fn model_shots(model: &Model, geometry: &Geometry) -> Result<Vec<Shot>> {
    (0..geometry.nsrc())
        .into_par_iter()
        .map(|i| {
            let g = geometry.single_source(i)?;
            let solver = AcousticSolver::new(model, &g)?;
            let observed = solver.forward(model, false)?.traces;
            Ok(Shot { geometry: g, observed })
        })
        .collect()
}

fn physical_rms(model: &Model, a: &Array, b: &Array) -> f64 {
    let shape = model.grid.shape().to_vec();
    let mut idx = vec![0usize; shape.len()];
    let (mut s, mut n) = (0.0, 0usize);
    for k in 0..a.len() {
        unravel(k, &shape, &mut idx);
        if model.is_physical(&idx) {
            let d = a.as_slice()[k] - b.as_slice()[k];
            s += d * d;
            n += 1;
        }
    }
    (s / n as f64).sqrt()
}

fn unravel(mut k: usize, shape: &[usize], idx: &mut [usize]) {
    for ax in (0..shape.len()).rev() {
        idx[ax] = k % shape[ax];
        k /= shape[ax];
    }
}

/// Summed objective and gradient over shots, reduced in shot order.
pub fn objective_and_gradient(solvers: &[AcousticSolver], shots: &[Shot], model: &Model) -> Result<(f64, Array)> {
    let parts: Vec<_> = solvers
        .par_iter()
        .zip(shots.par_iter())
        .map(|(s, shot)| s.objective_and_gradient(model, &shot.observed))
        .collect::<Result<Vec<_>>>()?;
    let mut grad = Array::zeros(model.m.shape());
    let mut phi = 0.0;
    for p in parts {
        phi += p.objective;
        for (g, v) in grad.as_mut_slice().iter_mut().zip(p.gradient.as_slice()) {
            *g += v;
        }
    }
    Ok((phi, grad))
}

/// Projected fixed-step gradient descent on the physical part of `m`.
pub fn fwi(model0: &Model, shots: &[Shot], opts: &FwiOptions, truth: Option<&Model>) -> Result<FwiResult> {
    if shots.is_empty() {
        return Err(SfError::Parameter("FWI needs at least one shot".into()));
    }
    if !(opts.m_min > 0.0 && opts.m_min <= opts.m_max) || !(opts.step >= 0.0) {
        return Err(SfError::Parameter("invalid FWI bounds or step".into()));
    }
    let solvers = shots
        .iter()
        .map(|s| AcousticSolver::with_options(model0, &s.geometry, CompileOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    let shape = model0.grid.shape().to_vec();
    let mut model = model0.clone();
    let mut trajectory = vec![model.m.clone()];
    let mut history = Vec::with_capacity(opts.iterations + 1);
    let err = |m: &Model| truth.map(|t| physical_rms(m, &m.m, &t.m));
    let mut idx = vec![0usize; shape.len()];
    for it in 0..=opts.iterations {
        let (phi, mut grad) = objective_and_gradient(&solvers, shots, &model)?;
        if !phi.is_finite() {
            return Err(SfError::Instability(format!("objective became {phi} at iteration {it}")));
        }
        for k in 0..grad.len() {
            unravel(k, &shape, &mut idx);
            if !model.is_physical(&idx) {
                grad.as_mut_slice()[k] = 0.0;
            }
        }
        let gmax = grad.max_abs();
        let alpha = if it == opts.iterations || gmax == 0.0 { 0.0 } else { opts.step / gmax };
        history.push(FwiRecord { iteration: it, objective: phi, step: alpha, model_error: err(&model) });
        if it == opts.iterations {
            break;
        }
        let mut m = model.m.clone();
        for (v, g) in m.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *v = (*v - alpha * g).clamp(opts.m_min, opts.m_max);
        }
        for k in 0..m.len() {
            unravel(k, &shape, &mut idx);
            if !model.is_physical(&idx) {
                m.as_mut_slice()[k] = model.m.as_slice()[k];
            }
        }
        model = model.with_m(m)?;
        trajectory.push(model.m.clone());
    }
    Ok(FwiResult { model, trajectory, history })
}
