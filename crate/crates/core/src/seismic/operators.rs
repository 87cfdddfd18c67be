//! Acoustic forward, adjoint and gradient operators.

use std::sync::Arc;

use serde::Serialize;

use super::model::Model;
use super::source::Geometry;
use crate::backend::{execute_with, Array, Bindings, ExecOptions, ExecReport};
use crate::compiler::{CompileOptions, Operator};
use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::sparse::SparseFunction;
use crate::symbolic::{solve_linear, Equation, Expr, FieldRef};

/// Result of one propagation: sampled traces plus the final state.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Sampled traces, shape `[nt, npoints]`.
    pub traces: Array,
    pub report: ExecReport,
    field: FieldRef,
    bindings: Bindings,
}

impl Propagation {
    /// Wavefield at time index `t`; buffered runs only keep the last levels.
    pub fn wavefield(&self, t: usize) -> Result<Array> {
        let len = self.field.time_len().unwrap_or(1);
        let slot = if self.field.is_buffered() { t % len } else { t };
        if slot >= len {
            return Err(SfError::State(format!("time index {t} not stored")));
        }
        self.bindings.interior(&self.field, Some(slot))
    }

    /// Whether the full time history was kept.
    pub fn is_saved(&self) -> bool {
        !self.field.is_buffered()
    }
}

/// Misfit, gradient and residual of one source experiment.
#[derive(Debug, Clone, Serialize)]
pub struct GradientResult {
    pub objective: f64,
    #[serde(skip)]
    pub gradient: Array,
    #[serde(skip)]
    pub residual: Array,
}

/// Compiled operators for one model grid and acquisition geometry.
#[derive(Debug, Clone)]
pub struct AcousticSolver {
    pub geometry: Geometry,
    pub space_order: usize,
    pub exec: ExecOptions,
    grid: Arc<Grid>,
    m: FieldRef,
    damp: FieldRef,
    u: FieldRef,
    u_saved: FieldRef,
    v: FieldRef,
    grad: FieldRef,
    src: SparseFunction,
    rec: SparseFunction,
    srca: SparseFunction,
    forward_op: Operator,
    saved_op: Operator,
    adjoint_op: Operator,
    gradient_op: Operator,
}

fn dt() -> Expr {
    Expr::sym("dt")
}

fn forward_equations(
    u: &FieldRef,
    m: &FieldRef,
    damp: &FieldRef,
    src: &SparseFunction,
    rec: &SparseFunction,
) -> Result<Vec<Equation>> {
    let pde = m.center() * u.dt2() - u.laplace() + damp.center() * u.dt();
    let stencil = solve_linear(&Equation::new(pde, 0), &u.forward())?;
    let mut eqs = vec![Equation::new(u.forward(), stencil)];
    eqs.extend(src.inject(&u.forward(), &(src.field.center() * dt().pow(2) / m.center()))?);
    eqs.extend(rec.interpolate(&u.center())?);
    Ok(eqs)
}

fn adjoint_stencil(v: &FieldRef, m: &FieldRef, damp: &FieldRef, rec: &SparseFunction) -> Result<Vec<Equation>> {
    let pde = m.center() * v.dt2() - v.laplace() - damp.center() * v.dt();
    let stencil = solve_linear(&Equation::new(pde, 0), &v.backward())?;
    let mut eqs = vec![Equation::new(v.backward(), stencil)];
    eqs.extend(rec.inject(&v.backward(), &(rec.field.center() * dt().pow(2) / m.center()))?);
    Ok(eqs)
}

impl AcousticSolver {
    pub fn new(model: &Model, geometry: &Geometry) -> Result<AcousticSolver> {
        Self::with_options(model, geometry, CompileOptions::default())
    }

    pub fn with_options(model: &Model, geometry: &Geometry, opts: CompileOptions) -> Result<AcousticSolver> {
        let g = &model.grid;
        let so = model.space_order;
        let nt = geometry.nt;
        check_cfl(model, geometry.dt)?;
        let m = FieldRef::dense("m", g, so)?;
        let damp = FieldRef::dense("damp", g, so)?;
        let u = FieldRef::time("u", g, so, 2, None)?;
        let u_saved = FieldRef::time("u", g, so, 2, Some(nt))?;
        let v = FieldRef::time("v", g, so, 2, None)?;
        let grad = FieldRef::dense("grad", g, so)?;
        let src = SparseFunction::new("src", g, geometry.src_coords.clone(), nt)?;
        let rec = SparseFunction::new("rec", g, geometry.rec_coords.clone(), nt)?;
        let srca = SparseFunction::new("srca", g, geometry.src_coords.clone(), nt)?;

        let forward_op = Operator::with_options(&forward_equations(&u, &m, &damp, &src, &rec)?, opts.clone())?;
        let saved_op = Operator::with_options(&forward_equations(&u_saved, &m, &damp, &src, &rec)?, opts.clone())?;
        let mut adj = adjoint_stencil(&v, &m, &damp, &rec)?;
        adj.extend(srca.interpolate(&v.center())?);
        let adjoint_op = Operator::with_options(&adj, opts.clone())?;
        let mut geq = adjoint_stencil(&v, &m, &damp, &rec)?;
        geq.push(Equation::new(grad.center(), grad.center() - u_saved.center() * v.dt2()));
        let gradient_op = Operator::with_options(&geq, opts)?;

        Ok(AcousticSolver {
            geometry: geometry.clone(),
            space_order: so,
            exec: ExecOptions::default(),
            grid: g.clone(),
            m,
            damp,
            u,
            u_saved,
            v,
            grad,
            src,
            rec,
            srca,
            forward_op,
            saved_op,
            adjoint_op,
            gradient_op,
        })
    }

    pub fn forward_operator(&self, save: bool) -> &Operator {
        if save {
            &self.saved_op
        } else {
            &self.forward_op
        }
    }

    pub fn adjoint_operator(&self) -> &Operator {
        &self.adjoint_op
    }

    pub fn gradient_operator(&self) -> &Operator {
        &self.gradient_op
    }

    pub fn source(&self) -> &SparseFunction {
        &self.src
    }

    pub fn receivers(&self) -> &SparseFunction {
        &self.rec
    }

    pub fn adjoint_sources(&self) -> &SparseFunction {
        &self.srca
    }

    fn traces_shape(&self, sf: &SparseFunction) -> [usize; 2] {
        [self.geometry.nt, sf.npoints()]
    }

    fn bind(&self, op: &Operator, model: &Model) -> Result<Bindings> {
        if *model.grid != *self.grid || model.space_order != self.space_order {
            return Err(SfError::Binding("model grid or order differs from the solver's".into()));
        }
        check_cfl(model, self.geometry.dt)?;
        let mut b = op.bindings();
        b.set_interior(&self.m, None, &model.m)?;
        b.set_interior(&self.damp, None, &model.damp)?;
        b.set_scalar("dt", self.geometry.dt);
        Ok(b)
    }

    fn check_traces(&self, a: &Array, sf: &SparseFunction) -> Result<()> {
        let want = self.traces_shape(sf);
        if a.shape() != want {
            return Err(SfError::Binding(format!("{} traces {:?} != {:?}", sf.field.name, a.shape(), want)));
        }
        Ok(())
    }

    /// Model receiver data for the geometry's source traces.
    pub fn forward(&self, model: &Model, save: bool) -> Result<Propagation> {
        self.forward_with(model, &self.geometry.src_data, save)
    }

    /// Bindings of the forward operator with `model` and source traces `src`
    /// in place, ready for any backend.
    pub fn forward_bindings(&self, model: &Model, src: &Array, save: bool) -> Result<Bindings> {
        self.check_traces(src, &self.src)?;
        let mut b = self.bind(self.forward_operator(save), model)?;
        b.set_array("src", src.clone());
        Ok(b)
    }

    /// Model receiver data for explicit source traces `[nt, nsrc]`.
    pub fn forward_with(&self, model: &Model, src: &Array, save: bool) -> Result<Propagation> {
        let op = self.forward_operator(save);
        let mut b = self.forward_bindings(model, src, save)?;
        let report = execute_with(op, &mut b, &self.exec)?;
        let traces = b.take_array("rec").expect("bound");
        let field = if save { self.u_saved.clone() } else { self.u.clone() };
        Ok(Propagation { traces, report, field, bindings: b })
    }

    /// Back-propagate receiver traces; returns the field sampled at the sources.
    pub fn adjoint(&self, model: &Model, rec: &Array) -> Result<Propagation> {
        self.check_traces(rec, &self.rec)?;
        let mut b = self.bind(&self.adjoint_op, model)?;
        b.set_array("rec", rec.clone());
        let report = execute_with(&self.adjoint_op, &mut b, &self.exec)?;
        let traces = b.take_array("srca").expect("bound");
        Ok(Propagation { traces, report, field: self.v.clone(), bindings: b })
    }

    /// Adjoint-state gradient of the misfit with residual `residual` given the
    /// saved forward run `fwd`.
    pub fn gradient(&self, model: &Model, residual: &Array, fwd: &Propagation) -> Result<Array> {
        if !fwd.is_saved() || fwd.field.name != self.u_saved.name {
            return Err(SfError::State("gradient needs a forward run with saved history".into()));
        }
        self.check_traces(residual, &self.rec)?;
        let u = fwd.bindings.array(&self.u_saved.name)?;
        if u.len() != self.u_saved.data_len() {
            return Err(SfError::State("saved forward history has the wrong length".into()));
        }
        let mut b = self.bind(&self.gradient_op, model)?;
        b.set_array("u", u.clone());
        b.set_array("rec", residual.clone());
        execute_with(&self.gradient_op, &mut b, &self.exec)?;
        b.interior(&self.grad, None)
    }

    /// Residual `syn - obs` restricted to the modelled samples `1..=nt-2`.
    pub fn residual(&self, syn: &Array, obs: &Array) -> Result<Array> {
        self.check_traces(syn, &self.rec)?;
        self.check_traces(obs, &self.rec)?;
        let nt = self.geometry.nt;
        let nr = self.rec.npoints();
        let mut r = Array::zeros(&[nt, nr]);
        let (s, o) = (syn.as_slice(), obs.as_slice());
        for k in nr..(nt - 1) * nr {
            r.as_mut_slice()[k] = s[k] - o[k];
        }
        Ok(r)
    }

    /// `½ ‖P_r u − d‖²` over the modelled samples.
    pub fn objective(&self, model: &Model, obs: &Array) -> Result<f64> {
        let fwd = self.forward(model, false)?;
        let r = self.residual(&fwd.traces, obs)?;
        Ok(half_norm2(&r))
    }

    pub fn objective_and_gradient(&self, model: &Model, obs: &Array) -> Result<GradientResult> {
        let fwd = self.forward(model, true)?;
        let residual = self.residual(&fwd.traces, obs)?;
        let objective = half_norm2(&residual);
        if !objective.is_finite() {
            return Err(SfError::Instability(format!("objective is {objective}")));
        }
        let gradient = self.gradient(model, &residual, &fwd)?;
        Ok(GradientResult { objective, gradient, residual })
    }
}

pub(crate) fn half_norm2(a: &Array) -> f64 {
    0.5 * a.as_slice().iter().map(|x| x * x).sum::<f64>()
}

/// Stability error when `dt` exceeds the model's critical step.
pub fn check_cfl(model: &Model, dt: f64) -> Result<()> {
    let crit = model.critical_dt();
    if dt > crit {
        return Err(SfError::Stability(format!("dt = {dt:e} s exceeds the critical step {crit:e} s")));
    }
    Ok(())
}
