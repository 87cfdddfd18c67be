//! Coupled viscous Burgers equations.

use std::sync::Arc;

use super::{min_max, set_both_levels, CfdSummary, Stepper};
use crate::backend::{Array, ExecOptions};
use crate::compiler::Operator;
use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::symbolic::{Equation, Expr, FieldRef, Region};

/// `u_t + u u_x + v u_y = ν Δu` and the same for `v`. First derivatives are
/// backward (upwind for positive velocities), second derivatives centred.
#[derive(Debug, Clone)]
pub struct Burgers {
    pub grid: Arc<Grid>,
    pub nu: f64,
    pub dt: f64,
    pub u: FieldRef,
    pub v: FieldRef,
    pub op: Operator,
    pub exec: ExecOptions,
}

impl Burgers {
    pub fn new(grid: &Arc<Grid>, nu: f64, dt: f64) -> Result<Burgers> {
        if grid.ndim() != 2 {
            return Err(SfError::Grid("Burgers system is 2-D".into()));
        }
        for &h in grid.spacing() {
            if nu * dt / (h * h) > 0.25 {
                return Err(SfError::Stability(format!("ν·dt/h² = {} exceeds 1/4", nu * dt / (h * h))));
            }
        }
        let u = FieldRef::time("u", grid, 2, 1, None)?;
        let v = FieldRef::time("v", grid, 2, 1, None)?;
        let (dt_s, nu_s) = (Expr::sym("dt"), Expr::sym("nu"));
        let update = |w: &FieldRef| {
            let adv = u.center() * w.d1_left(0) + v.center() * w.d1_left(1);
            let diff = w.dx2() + w.dy2();
            w.center() - &dt_s * adv + &dt_s * &nu_s * diff
        };
        let eqs = [
            Equation::new(u.forward(), update(&u)).with_region(Region::interior(2, 1)),
            Equation::new(v.forward(), update(&v)).with_region(Region::interior(2, 1)),
        ];
        let op = Operator::new(&eqs)?;
        Ok(Burgers { grid: grid.clone(), nu, dt, u, v, op, exec: ExecOptions::default() })
    }

    pub fn run_with(
        &self,
        u0: &Array,
        v0: &Array,
        nsteps: usize,
        observe: &mut dyn FnMut(usize, &Array, &Array),
    ) -> Result<(Array, Array)> {
        let mut b = self.op.bindings();
        b.set_scalar("dt", self.dt);
        b.set_scalar("nu", self.nu);
        set_both_levels(&mut b, &self.u, u0)?;
        set_both_levels(&mut b, &self.v, v0)?;
        let mut s = Stepper::new(&self.op, b);
        s.exec = self.exec.clone();
        for k in 0..nsteps {
            s.advance()?;
            observe(k + 1, &s.current(&self.u)?, &s.current(&self.v)?);
        }
        Ok((s.current(&self.u)?, s.current(&self.v)?))
    }

    pub fn run(&self, u0: &Array, v0: &Array, nsteps: usize) -> Result<(Array, Array, CfdSummary)> {
        let (u, v) = self.run_with(u0, v0, nsteps, &mut |_, _, _| {})?;
        let (a, b) = (min_max(&u), min_max(&v));
        let summary =
            CfdSummary { case: "burgers".into(), steps: nsteps, min: a.0.min(b.0), max: a.1.max(b.1), residuals: vec![] };
        Ok((u, v, summary))
    }
}
