//! Convection, Burgers and Poisson solvers written in the DSL.

pub mod burgers;
pub mod convection;
pub mod poisson;

use serde::Serialize;

use crate::backend::{Array, Bindings, ExecOptions};
use crate::compiler::Operator;
use crate::error::Result;
use crate::symbolic::FieldRef;

pub use burgers::Burgers;
pub use convection::Convection;
pub use poisson::{dipole_rhs, Poisson, PoissonResult};

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfdSummary {
    pub case: String,
    pub steps: usize,
    pub min: f64,
    pub max: f64,
    /// Residual history (Poisson only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
}

pub fn min_max(a: &Array) -> (f64, f64) {
    a.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Advance a two-level time function one step at a time.
pub(crate) struct Stepper<'a> {
    pub op: &'a Operator,
    pub b: Bindings,
    pub step: usize,
    pub exec: ExecOptions,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a Operator, b: Bindings) -> Self {
        Stepper { op, b, step: 0, exec: ExecOptions::default() }
    }

    pub fn advance(&mut self) -> Result<()> {
        let t = self.step as i64;
        self.b.set_time_range(t, t);
        crate::backend::execute_with(self.op, &mut self.b, &self.exec)?;
        self.step += 1;
        Ok(())
    }

    /// Current state of `f`.
    pub fn current(&self, f: &FieldRef) -> Result<Array> {
        self.b.interior(f, Some(self.step % 2))
    }
}

/// Write `init` into both time levels of `f`.
pub(crate) fn set_both_levels(b: &mut Bindings, f: &FieldRef, init: &Array) -> Result<()> {
    b.set_interior(f, Some(0), init)?;
    b.set_interior(f, Some(1), init)
}

/// `value` inside the axis-aligned box `[lo, hi]` (physical coordinates), `background` elsewhere.
pub fn box_field(grid: &crate::grid::Grid, lo: f64, hi: f64, background: f64, value: f64) -> Array {
    let shape = grid.shape();
    let mut out = Array::filled(shape, background);
    let mut idx = vec![0usize; shape.len()];
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        let mut r = k;
        for ax in (0..shape.len()).rev() {
            idx[ax] = r % shape[ax];
            r /= shape[ax];
        }
        let x = grid.node_coords(&idx);
        if x.iter().all(|&c| c >= lo && c <= hi) {
            *v = value;
        }
    }
    out
}
