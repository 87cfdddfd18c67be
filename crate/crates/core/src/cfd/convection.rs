//! Linear convection with first-order upwind differences.

use std::sync::Arc;

use super::{min_max, set_both_levels, CfdSummary, Stepper};
use crate::backend::{Array, ExecOptions};
use crate::compiler::Operator;
use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::symbolic::{Equation, Expr, FieldRef, Region};

/// `u_t + c u_x + c u_y = 0` with backward differences in space and the
/// boundary held at its initial values.
#[derive(Debug, Clone)]
pub struct Convection {
    pub grid: Arc<Grid>,
    pub c: f64,
    pub dt: f64,
    pub u: FieldRef,
    pub op: Operator,
    pub exec: ExecOptions,
}

impl Convection {
    pub fn new(grid: &Arc<Grid>, c: f64, dt: f64) -> Result<Convection> {
        for &h in grid.spacing() {
            if c.abs() * dt / h > 1.0 {
                return Err(SfError::Stability(format!("c·dt/h = {} exceeds 1", c.abs() * dt / h)));
            }
        }
        let nd = grid.ndim();
        let u = FieldRef::time("u", grid, 2, 1, None)?;
        let cdt = Expr::sym("c") * Expr::sym("dt");
        let mut rhs = u.center();
        for ax in 0..nd {
            rhs = rhs - &cdt * u.d1_left(ax);
        }
        let op = Operator::new(&[Equation::new(u.forward(), rhs).with_region(Region::interior(nd, 1))])?;
        Ok(Convection { grid: grid.clone(), c, dt, u, op, exec: ExecOptions::default() })
    }

    /// The classic setup: unit field with a value-2 square over `[0.5, 1]` on `[0, 2]²`.
    pub fn hat(n: usize) -> Result<(Arc<Grid>, Array)> {
        let h = 2.0 / (n - 1) as f64;
        let grid = Grid::new(&[n, n], &[h, h])?;
        let init = super::box_field(&grid, 0.5, 1.0, 1.0, 2.0);
        Ok((grid, init))
    }

    /// Run `nsteps` from `init`, calling `observe(step, state)` after every step.
    pub fn run_with(&self, init: &Array, nsteps: usize, observe: &mut dyn FnMut(usize, &Array)) -> Result<Array> {
        let mut b = self.op.bindings();
        b.set_scalar("c", self.c);
        b.set_scalar("dt", self.dt);
        set_both_levels(&mut b, &self.u, init)?;
        let mut s = Stepper::new(&self.op, b);
        s.exec = self.exec.clone();
        for k in 0..nsteps {
            s.advance()?;
            observe(k + 1, &s.current(&self.u)?);
        }
        s.current(&self.u)
    }

    pub fn run(&self, init: &Array, nsteps: usize) -> Result<(Array, CfdSummary)> {
        let out = self.run_with(init, nsteps, &mut |_, _| {})?;
        let (min, max) = min_max(&out);
        Ok((out, CfdSummary { case: "convection".into(), steps: nsteps, min, max, residuals: vec![] }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximum_principle_and_boundary() {
        let (grid, init) = Convection::hat(81).unwrap();
        let h = grid.spacing()[0];
        let conv = Convection::new(&grid, 1.0, 0.2 * h).unwrap();
        let mut ok = true;
        let mut prev = min_max(&init);
        let out = conv
            .run_with(&init, 100, &mut |_, u| {
                let (lo, hi) = min_max(u);
                ok &= lo >= prev.0 && hi <= prev.1;
                prev = (lo, hi);
            })
            .unwrap();
        assert!(ok);
        assert_eq!(out.get(&[0, 40]), 1.0);
        assert_eq!(out.get(&[80, 80]), 1.0);
    }

    #[test]
    fn matches_plain_loop() {
        let (grid, init) = Convection::hat(21).unwrap();
        let h = grid.spacing()[0];
        let s = 0.3;
        let conv = Convection::new(&grid, 1.0, s * h).unwrap();
        let (out, _) = conv.run(&init, 15).unwrap();
        let n = 21;
        let mut u = init.clone();
        for _ in 0..15 {
            let prev = u.clone();
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let c = prev.get(&[i, j]);
                    let v = c - s * (c - prev.get(&[i - 1, j])) - s * (c - prev.get(&[i, j - 1]));
                    u.set(&[i, j], v);
                }
            }
        }
        let err = out.as_slice().iter().zip(u.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn rejects_unstable_courant() {
        let (grid, _) = Convection::hat(11).unwrap();
        assert!(matches!(Convection::new(&grid, 1.0, 0.3), Err(SfError::Stability(_))));
    }
}
