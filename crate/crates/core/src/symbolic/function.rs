//! Field declarations: dense, time-dependent and sparse grid functions.
//!
//! A declaration carries names, grid metadata and storage layout. Data buffers
//! live in execution bindings, keyed by field name.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Deref;
use std::sync::Arc;

use super::calculus;
use super::expr::{Expr, Index, Side};
use crate::error::{Result, SfError};
use crate::grid::{Dimension, Grid};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// Time-invariant field over the grid.
    Dense,
    /// Time-dependent field; `save = None` means a circular buffer of `time_order + 1` slots.
    Time { time_order: usize, save: Option<usize> },
    /// Off-grid point set with one sample per time step: layout `[nt, npoints]`.
    Sparse { npoints: usize, nt: usize },
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
    pub grid: Arc<Grid>,
    pub space_order: usize,
    pub dims: Vec<Dimension>,
}

impl FieldDecl {
    /// Halo points per side (`space_order / 2`); zero for sparse functions.
    pub fn halo(&self) -> usize {
        match self.kind {
            FieldKind::Sparse { .. } => 0,
            _ => self.space_order / 2,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        !matches!(self.kind, FieldKind::Dense)
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.kind, FieldKind::Sparse { .. })
    }

    pub fn time_position(&self) -> Option<usize> {
        self.dims.iter().position(|d| d.is_time())
    }

    /// Number of stored time levels, `None` for time-invariant fields.
    pub fn time_len(&self) -> Option<usize> {
        match self.kind {
            FieldKind::Dense => None,
            FieldKind::Time { time_order, save } => Some(save.unwrap_or(time_order + 1)),
            FieldKind::Sparse { nt, .. } => Some(nt),
        }
    }

    /// True for circular-buffer storage indexed modulo its length.
    pub fn is_buffered(&self) -> bool {
        matches!(self.kind, FieldKind::Time { save: None, .. })
    }

    pub fn padded_shape(&self) -> Vec<usize> {
        let h = self.halo();
        self.grid.shape().iter().map(|&n| n + 2 * h).collect()
    }

    /// Full storage shape including the time axis.
    pub fn data_shape(&self) -> Vec<usize> {
        match self.kind {
            FieldKind::Dense => self.padded_shape(),
            FieldKind::Time { .. } => {
                let mut s = vec![self.time_len().unwrap()];
                s.extend(self.padded_shape());
                s
            }
            FieldKind::Sparse { npoints, nt } => vec![nt, npoints],
        }
    }

    pub fn data_len(&self) -> usize {
        self.data_shape().iter().product()
    }

    pub fn space_dims(&self) -> Vec<Dimension> {
        self.dims.iter().filter(|d| d.axis().is_some()).cloned().collect()
    }
}

/// Shared handle to a field declaration. Compared and hashed by name.
#[derive(Clone)]
pub struct FieldRef(pub Arc<FieldDecl>);

impl Deref for FieldRef {
    type Target = FieldDecl;
    fn deref(&self) -> &FieldDecl {
        &self.0
    }
}

impl PartialEq for FieldRef {
    fn eq(&self, other: &Self) -> bool {
        self.0.name == other.0.name
    }
}
impl Eq for FieldRef {}
impl PartialOrd for FieldRef {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FieldRef {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.name.cmp(&other.0.name)
    }
}
impl Hash for FieldRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.name.hash(state)
    }
}
impl fmt::Debug for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.name)
    }
}

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(SfError::Parameter(format!("invalid identifier {name:?}")))
    }
}

fn check_space_order(k: usize) -> Result<()> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(SfError::Order(format!("space_order must be even and >= 2, got {k}")));
    }
    Ok(())
}

impl FieldRef {
    /// Time-invariant field (squared slowness, damping, gradients).
    pub fn dense(name: &str, grid: &Arc<Grid>, space_order: usize) -> Result<FieldRef> {
        check_name(name)?;
        check_space_order(space_order)?;
        Ok(Self::dense_unchecked(name, grid, space_order))
    }

    /// Dense field with arbitrary (possibly zero) halo, used for compiler temporaries.
    pub(crate) fn dense_unchecked(name: &str, grid: &Arc<Grid>, space_order: usize) -> FieldRef {
        FieldRef(Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Dense,
            grid: grid.clone(),
            space_order,
            dims: grid.dimensions(),
        }))
    }

    /// Time-dependent field; `save = Some(nt)` keeps the full history.
    pub fn time(
        name: &str,
        grid: &Arc<Grid>,
        space_order: usize,
        time_order: usize,
        save: Option<usize>,
    ) -> Result<FieldRef> {
        check_name(name)?;
        check_space_order(space_order)?;
        if time_order < 1 {
            return Err(SfError::Order("time_order must be >= 1".into()));
        }
        if let Some(n) = save {
            if n < time_order + 1 {
                return Err(SfError::Parameter(format!(
                    "save length {n} is shorter than time_order + 1 = {}",
                    time_order + 1
                )));
            }
        }
        let mut dims = vec![Dimension::time()];
        dims.extend(grid.dimensions());
        Ok(FieldRef(Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Time { time_order, save },
            grid: grid.clone(),
            space_order,
            dims,
        })))
    }

    /// Sparse time series over `npoints` off-grid locations.
    pub fn sparse(name: &str, grid: &Arc<Grid>, npoints: usize, nt: usize) -> Result<FieldRef> {
        check_name(name)?;
        if npoints == 0 || nt == 0 {
            return Err(SfError::Parameter("sparse function needs npoints >= 1 and nt >= 1".into()));
        }
        Ok(FieldRef(Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Sparse { npoints, nt },
            grid: grid.clone(),
            space_order: 0,
            dims: vec![Dimension::time(), Dimension::point(name)],
        })))
    }

    pub fn decl(&self) -> &FieldDecl {
        &self.0
    }

    pub fn time_order(&self) -> usize {
        match self.kind {
            FieldKind::Time { time_order, .. } => time_order,
            _ => 0,
        }
    }

    /// Access with the given relative time offset and space offsets.
    pub fn at(&self, time_offset: i64, space: &[i64]) -> Expr {
        let mut idx = Vec::with_capacity(self.dims.len());
        let mut s = space.iter();
        for d in &self.dims {
            if d.is_time() {
                idx.push(Index::Rel(time_offset));
            } else {
                idx.push(Index::Rel(*s.next().unwrap_or(&0)));
            }
        }
        Expr::access(self.clone(), idx)
    }

    /// Access at the current point of every dimension.
    pub fn center(&self) -> Expr {
        self.at(0, &[])
    }

    pub fn forward(&self) -> Expr {
        self.at(1, &[])
    }

    pub fn backward(&self) -> Expr {
        self.at(-1, &[])
    }

    /// Sparse sample of point `p` at a relative time offset.
    pub fn point(&self, time_offset: i64, p: usize) -> Expr {
        Expr::access(self.clone(), vec![Index::Rel(time_offset), Index::Abs(p as i64)])
    }

    fn space_dim(&self, axis: usize) -> Dimension {
        assert!(axis < self.grid.ndim(), "axis {axis} out of range for {}-D field", self.grid.ndim());
        Dimension::space(axis)
    }

    /// First derivative along `axis`, centered at full space order.
    pub fn d1(&self, axis: usize) -> Expr {
        calculus::derivative(&self.center(), &self.space_dim(axis), 1, self.space_order, Side::Centered)
            .expect("space order validated at construction")
    }

    /// Second derivative along `axis`, centered at full space order.
    pub fn d2(&self, axis: usize) -> Expr {
        calculus::derivative(&self.center(), &self.space_dim(axis), 2, self.space_order, Side::Centered)
            .expect("space order validated at construction")
    }

    pub fn dx(&self) -> Expr {
        self.d1(0)
    }
    pub fn dy(&self) -> Expr {
        self.d1(1)
    }
    pub fn dz(&self) -> Expr {
        self.d1(2)
    }
    pub fn dx2(&self) -> Expr {
        self.d2(0)
    }
    pub fn dy2(&self) -> Expr {
        self.d2(1)
    }
    pub fn dz2(&self) -> Expr {
        self.d2(2)
    }

    /// First-order one-sided backward difference along `axis`.
    pub fn d1_left(&self, axis: usize) -> Expr {
        calculus::derivative(&self.center(), &self.space_dim(axis), 1, 1, Side::Backward)
            .expect("first-order one-sided stencil always fits")
    }

    /// First-order one-sided forward difference along `axis`.
    pub fn d1_right(&self, axis: usize) -> Expr {
        calculus::derivative(&self.center(), &self.space_dim(axis), 1, 1, Side::Forward)
            .expect("first-order one-sided stencil always fits")
    }

    /// First time derivative: centered for `time_order >= 2`, forward otherwise.
    pub fn dt(&self) -> Expr {
        let (fd, side) = if self.time_order() >= 2 { (2, Side::Centered) } else { (1, Side::Forward) };
        calculus::derivative(&self.center(), &Dimension::time(), 1, fd, side)
            .expect("time derivative of a time function")
    }

    /// Second time derivative on three time levels.
    pub fn dt2(&self) -> Expr {
        calculus::derivative(&self.center(), &Dimension::time(), 2, 2, Side::Centered)
            .expect("time derivative of a time function")
    }

    pub fn laplace(&self) -> Expr {
        calculus::laplace(&self.center(), self.space_order).expect("space order validated at construction")
    }
}

/// Named runtime scalar (wave speed, viscosity, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: String,
    pub value: f64,
}

impl Constant {
    pub fn new(name: &str, value: f64) -> Result<Constant> {
        check_name(name)?;
        if !value.is_finite() {
            return Err(SfError::Parameter(format!("constant {name} must be finite")));
        }
        Ok(Constant { name: name.to_string(), value })
    }

    pub fn expr(&self) -> Expr {
        Expr::sym(&self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_layouts() {
        let g = Grid::new(&[10, 12], &[1.0, 1.0]).unwrap();
        let m = FieldRef::dense("m", &g, 4).unwrap();
        assert_eq!(m.halo(), 2);
        assert_eq!(m.data_shape(), vec![14, 16]);
        let u = FieldRef::time("u", &g, 8, 2, None).unwrap();
        assert_eq!(u.data_shape(), vec![3, 18, 20]);
        assert!(u.is_buffered());
        let us = FieldRef::time("us", &g, 2, 2, Some(50)).unwrap();
        assert_eq!(us.data_shape()[0], 50);
        let rec = FieldRef::sparse("rec", &g, 7, 50).unwrap();
        assert_eq!(rec.data_shape(), vec![50, 7]);
    }

    #[test]
    fn invalid_declarations() {
        let g = Grid::new(&[10, 12], &[1.0, 1.0]).unwrap();
        assert!(matches!(FieldRef::dense("m", &g, 3), Err(SfError::Order(_))));
        assert!(FieldRef::time("u", &g, 2, 2, Some(2)).is_err());
        assert!(FieldRef::dense("1m", &g, 2).is_err());
        assert!(Constant::new("c", f64::NAN).is_err());
    }

    #[test]
    fn access_display() {
        let g = Grid::new(&[10, 12], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        assert_eq!(u.at(1, &[-1, 2]).to_string(), "u[t + 1, x - 1, y + 2]");
        let rec = FieldRef::sparse("rec", &g, 3, 5).unwrap();
        assert_eq!(rec.point(0, 2).to_string(), "rec[t, 2]");
    }
}
