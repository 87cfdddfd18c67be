//! Jacobi iteration for the 2-D Poisson equation on a buffered field.

use std::sync::Arc;

use super::{min_max, CfdSummary, Stepper};
use crate::backend::{Array, ExecOptions};
use crate::compiler::Operator;
use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::symbolic::{Equation, FieldRef, Region};

/// `Δp = b` with `p = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct Poisson {
    pub grid: Arc<Grid>,
    pub p: FieldRef,
    pub b: FieldRef,
    pub op: Operator,
    pub exec: ExecOptions,
}

#[derive(Debug, Clone)]
pub struct PoissonResult {
    pub p: Array,
    /// `‖Δp − b‖₂` over interior points, before the first and after every iteration.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub summary: CfdSummary,
}

/// `+amp` at `(nx/4, ny/4)` and `−amp` at `(3nx/4, 3ny/4)`.
pub fn dipole_rhs(shape: &[usize], amp: f64) -> Array {
    let mut b = Array::zeros(shape);
    b.set(&[shape[0] / 4, shape[1] / 4], amp);
    b.set(&[3 * shape[0] / 4, 3 * shape[1] / 4], -amp);
    b
}

impl Poisson {
    pub fn new(grid: &Arc<Grid>) -> Result<Poisson> {
        if grid.ndim() != 2 {
            return Err(SfError::Grid("Poisson solver is 2-D".into()));
        }
        let p = FieldRef::time("p", grid, 2, 1, None)?;
        let b = FieldRef::dense("b", grid, 2)?;
        let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
        let (hx2, hy2) = (hx * hx, hy * hy);
        let num = (p.at(0, &[1, 0]) + p.at(0, &[-1, 0])) * hy2 + (p.at(0, &[0, 1]) + p.at(0, &[0, -1])) * hx2
            - b.center() * (hx2 * hy2);
        let rhs = num * (1.0 / (2.0 * (hx2 + hy2)));
        let op = Operator::new(&[Equation::new(p.forward(), rhs).with_region(Region::interior(2, 1))])?;
        Ok(Poisson { grid: grid.clone(), p, b, op, exec: ExecOptions::default() })
    }

    /// The classic 50×50 grid over `[0, 2] × [0, 1]`.
    pub fn classic() -> Result<Poisson> {
        Poisson::new(&Grid::new(&[50, 50], &[2.0 / 49.0, 1.0 / 49.0])?)
    }

    /// Five-point residual `‖Δp − b‖₂` over interior points.
    pub fn residual(&self, p: &Array, b: &Array) -> f64 {
        let [nx, ny] = [self.grid.shape()[0], self.grid.shape()[1]];
        let (hx, hy) = (self.grid.spacing()[0], self.grid.spacing()[1]);
        let mut s = 0.0;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let c = p.get(&[i, j]);
                let lap = (p.get(&[i + 1, j]) - 2.0 * c + p.get(&[i - 1, j])) / (hx * hx)
                    + (p.get(&[i, j + 1]) - 2.0 * c + p.get(&[i, j - 1])) / (hy * hy);
                s += (lap - b.get(&[i, j])).powi(2);
            }
        }
        s.sqrt()
    }

    /// `n_iter` Jacobi sweeps from `p0`; stops early once the update norm drops
    /// below `tol` when one is given.
    pub fn iterate(&self, b: &Array, p0: &Array, n_iter: usize, tol: Option<f64>) -> Result<PoissonResult> {
        if n_iter == 0 {
            return Err(SfError::Parameter("Poisson needs at least one iteration".into()));
        }
        let mut bind = self.op.bindings();
        bind.set_interior(&self.b, None, b)?;
        bind.set_interior(&self.p, Some(0), p0)?;
        let mut s = Stepper::new(&self.op, bind);
        s.exec = self.exec.clone();
        let mut prev = p0.clone();
        let mut residuals = vec![self.residual(p0, b)];
        for _ in 0..n_iter {
            s.advance()?;
            let cur = s.current(&self.p)?;
            residuals.push(self.residual(&cur, b));
            let change = cur.as_slice().iter().zip(prev.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prev = cur;
            if tol.is_some_and(|t| change < t) {
                break;
            }
        }
        let (min, max) = min_max(&prev);
        let summary =
            CfdSummary { case: "poisson".into(), steps: s.step, min, max, residuals: residuals.clone() };
        Ok(PoissonResult { p: prev, residuals, iterations: s.step, summary })
    }
}
