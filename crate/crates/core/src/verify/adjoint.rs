//! Dot tests of the wave propagators and of the sparse operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{Array, Bindings};
use crate::compiler::Operator;
use crate::error::Result;
use crate::grid::Grid;
use crate::seismic::{two_layer_velocity, AcousticSolver, DampingProfile, Geometry, Model};
use crate::sparse::SparseFunction;
use crate::symbolic::FieldRef;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DotRow {
    pub kind: String,
    pub ndim: usize,
    pub order: usize,
    /// `<F x, y>`
    pub forward: f64,
    /// `<x, F^T y>`
    pub adjoint: f64,
    pub rel_error: f64,
}

impl DotRow {
    fn new(kind: &str, ndim: usize, order: usize, forward: f64, adjoint: f64) -> DotRow {
        let scale = forward.abs().max(adjoint.abs());
        let rel_error = if scale == 0.0 { 0.0 } else { (forward - adjoint).abs() / scale };
        DotRow { kind: kind.to_string(), ndim, order, forward, adjoint, rel_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointConfig {
    pub orders: Vec<usize>,
    pub dims: Vec<usize>,
    /// Physical points per axis for 2-D and 3-D runs.
    pub shape_2d: usize,
    pub shape_3d: usize,
    pub nbl: usize,
    pub spacing: f64,
    /// Propagation time (s).
    pub tn: f64,
    pub nrec: usize,
    pub seed: u64,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig {
            orders: vec![2, 4, 6, 8, 10, 12],
            dims: vec![2, 3],
            shape_2d: 64,
            shape_3d: 32,
            nbl: 10,
            spacing: 10.0,
            tn: 0.25,
            nrec: 8,
            seed: 1234,
        }
    }
}

fn dot(a: &Array, b: &Array) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Array {
    let n = shape.iter().product();
    Array::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape")
}

/// Random off-grid point at least `margin` spacings inside the physical domain.
fn interior_point(model: &Model, margin: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h = model.grid.spacing();
    model
        .physical_shape()
        .iter()
        .enumerate()
        .map(|(ax, &n)| rng.gen_range(margin * h[ax]..((n - 1) as f64 - margin) * h[ax]))
        .collect()
}

/// `<F q, d>` against `<q, F^T d>` for random source and receiver traces.
pub fn propagator_dot_test(ndim: usize, order: usize, cfg: &AdjointConfig) -> Result<DotRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((ndim as u64) << 8) ^ order as u64);
    let n = if ndim == 2 { cfg.shape_2d } else { cfg.shape_3d };
    let shape = vec![n; ndim];
    let vp = two_layer_velocity(&shape, n / 2, 1500.0, 2500.0);
    let model = Model::from_velocity(
        &vp,
        &vec![cfg.spacing; ndim],
        &vec![0.0; ndim],
        cfg.nbl,
        order,
        DampingProfile::default(),
    )?;
    let dt = 0.9 * model.critical_dt();
    let src = vec![interior_point(&model, 2.0, &mut rng)];
    let rec = (0..cfg.nrec).map(|_| interior_point(&model, 2.0, &mut rng)).collect();
    let geom = Geometry::ricker(src, rec, 0.0, cfg.tn, dt, 10.0)?;
    let solver = AcousticSolver::new(&model, &geom)?;
    let q = random(&[geom.nt, 1], &mut rng);
    let d = random(&[geom.nt, cfg.nrec], &mut rng);
    let fq = solver.forward_with(&model, &q, false)?.traces;
    let ftd = solver.adjoint(&model, &d)?.traces;
    Ok(DotRow::new("propagator", ndim, order, dot(&fq, &d), dot(&q, &ftd)))
}

/// Interpolation and injection operators of `sf` on a dense field named `f`.
fn sparse_operators(sf: &SparseFunction, f: &FieldRef) -> Result<(Operator, Operator)> {
    let interp = Operator::new(&sf.interpolate(&f.center())?)?;
    let inject = Operator::new(&sf.inject(&f.center(), &sf.field.center())?)?;
    Ok((interp, inject))
}

fn run_interp(op: &Operator, sf: &SparseFunction, f: &FieldRef, x: &Array) -> Result<Array> {
    let mut b: Bindings = op.bindings();
    b.set_interior(f, None, x)?;
    op.apply(&mut b)?;
    Ok(b.take_array(&sf.field.name).expect("bound"))
}

fn run_inject(op: &Operator, sf: &SparseFunction, f: &FieldRef, y: &Array) -> Result<Array> {
    let mut b: Bindings = op.bindings();
    b.set_array(&sf.field.name, y.clone());
    op.apply(&mut b)?;
    b.interior(f, None)
}

/// Dense matrices `(P, Q)` of interpolation `[np, N]` and injection `[N, np]`
/// assembled column by column through the compiled operators.
pub fn sparse_matrices(grid: &std::sync::Arc<Grid>, coords: Vec<Vec<f64>>) -> Result<(Array, Array)> {
    let sf = SparseFunction::new("s", grid, coords, 1)?;
    let f = FieldRef::dense("f", grid, 2)?;
    let (interp, inject) = sparse_operators(&sf, &f)?;
    let n = grid.npoints();
    let np = sf.npoints();
    let mut p = Array::zeros(&[np, n]);
    for j in 0..n {
        let mut e = Array::zeros(grid.shape());
        e.as_mut_slice()[j] = 1.0;
        let col = run_interp(&interp, &sf, &f, &e)?;
        for i in 0..np {
            p.as_mut_slice()[i * n + j] = col.as_slice()[i];
        }
    }
    let mut q = Array::zeros(&[n, np]);
    for j in 0..np {
        let mut e = Array::zeros(&[1, np]);
        e.as_mut_slice()[j] = 1.0;
        let col = run_inject(&inject, &sf, &f, &e)?;
        for i in 0..n {
            q.as_mut_slice()[i * np + j] = col.as_slice()[i];
        }
    }
    Ok((p, q))
}

/// Dot test of interpolation against injection for random off-grid points.
pub fn sparse_dot_test(ndim: usize, n: usize, npoints: usize, seed: u64) -> Result<DotRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(&vec![n; ndim], &vec![1.0; ndim])?;
    let coords = (0..npoints).map(|_| (0..ndim).map(|_| rng.gen_range(0.0..(n - 1) as f64)).collect()).collect();
    let sf = SparseFunction::new("s", &grid, coords, 1)?;
    let f = FieldRef::dense("f", &grid, 2)?;
    let (interp, inject) = sparse_operators(&sf, &f)?;
    let x = random(grid.shape(), &mut rng);
    let y = random(&[1, npoints], &mut rng);
    let px = run_interp(&interp, &sf, &f, &x)?;
    let qy = run_inject(&inject, &sf, &f, &y)?;
    Ok(DotRow::new("sparse", ndim, 1, dot(&px, &y), dot(&x, &qy)))
}

/// Propagator dot tests for every configured dimension and order, plus the
/// isolated sparse-operator tests.
pub fn adjoint_test(cfg: &AdjointConfig) -> Result<Vec<DotRow>> {
    let jobs: Vec<(usize, usize)> = cfg.dims.iter().flat_map(|&d| cfg.orders.iter().map(move |&k| (d, k))).collect();
    let mut rows = jobs.par_iter().map(|&(d, k)| propagator_dot_test(d, k, cfg)).collect::<Result<Vec<_>>>()?;
    for &d in &cfg.dims {
        rows.push(sparse_dot_test(d, 9, 6, cfg.seed)?);
    }
    Ok(rows)
}
