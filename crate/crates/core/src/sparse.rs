//! Off-grid point sets: multilinear interpolation and injection.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::symbolic::expr::{make_add, make_mul, Expr, Index, Node};
use crate::symbolic::{Equation, FieldRef};

/// Containing cell and corner weights. Corner `c` has bit `i` set when it
/// sits at `base[i] + 1` along axis `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    pub base: Vec<usize>,
    pub weights: Vec<f64>,
}

impl CellWeights {
    pub fn corner(&self, c: usize) -> Vec<usize> {
        self.base.iter().enumerate().map(|(i, &b)| b + ((c >> i) & 1)).collect()
    }
}

/// Multilinear weights of `coord` inside `grid`.
pub fn locate(coord: &[f64], grid: &Grid) -> Result<CellWeights> {
    if coord.len() != grid.ndim() {
        return Err(SfError::Location(format!("{}-D coordinate on a {}-D grid", coord.len(), grid.ndim())));
    }
    let mut base = Vec::with_capacity(coord.len());
    let mut frac = Vec::with_capacity(coord.len());
    for d in 0..grid.ndim() {
        let n = grid.shape()[d];
        let pos = (coord[d] - grid.origin()[d]) / grid.spacing()[d];
        let last = (n - 1) as f64;
        let tol = 1e-9 * last.max(1.0);
        if !pos.is_finite() || pos < -tol || pos > last + tol {
            return Err(SfError::Location(format!("coordinate {coord:?} outside the grid along axis {d}")));
        }
        let pos = pos.clamp(0.0, last);
        let b = (pos.floor() as usize).min(n - 2);
        base.push(b);
        frac.push(pos - b as f64);
    }
    let weights = (0..1usize << grid.ndim())
        .map(|c| {
            frac.iter()
                .enumerate()
                .map(|(i, &f)| if (c >> i) & 1 == 1 { f } else { 1.0 - f })
                .product()
        })
        .collect();
    Ok(CellWeights { base, weights })
}

/// Sparse time series attached to physical coordinates.
#[derive(Debug, Clone)]
pub struct SparseFunction {
    pub field: FieldRef,
    pub coords: Vec<Vec<f64>>,
    cells: Vec<CellWeights>,
}

impl SparseFunction {
    pub fn new(name: &str, grid: &Arc<Grid>, coords: Vec<Vec<f64>>, nt: usize) -> Result<SparseFunction> {
        let cells = coords.iter().map(|c| locate(c, grid)).collect::<Result<Vec<_>>>()?;
        let field = FieldRef::sparse(name, grid, coords.len(), nt)?;
        Ok(SparseFunction { field, coords, cells })
    }

    pub fn npoints(&self) -> usize {
        self.coords.len()
    }

    pub fn nt(&self) -> usize {
        self.field.time_len().unwrap_or(0)
    }

    pub fn cells(&self) -> &[CellWeights] {
        &self.cells
    }

    fn check_grid(&self, e: &Expr) -> Result<()> {
        for a in e.accesses() {
            if a.field.is_sparse() {
                continue;
            }
            if *a.field.grid != *self.field.grid {
                return Err(SfError::Binding(format!(
                    "field {} is not on the grid of {}",
                    a.field.name, self.field.name
                )));
            }
        }
        Ok(())
    }

    /// `self[t, p] = sum_c w_c * expr(corner_c)` for every point `p`.
    pub fn interpolate(&self, expr: &Expr) -> Result<Vec<Equation>> {
        self.check_grid(expr)?;
        Ok(self
            .cells
            .iter()
            .enumerate()
            .map(|(p, cell)| {
                let terms = (0..cell.weights.len())
                    .filter(|&c| cell.weights[c] != 0.0)
                    .map(|c| make_mul(vec![Expr::float(cell.weights[c]), localize(expr, p, &cell.corner(c))]))
                    .collect();
                Equation::new(self.field.point(0, p), make_add(terms))
            })
            .collect())
    }

    /// `target(corner_c) += w_c * expr` for every point (point-major, corner-minor).
    ///
    /// `target` is a field access such as `u.forward()`; `expr` may reference
    /// this function at the current point through `self.field.center()`.
    pub fn inject(&self, target: &Expr, expr: &Expr) -> Result<Vec<Equation>> {
        self.check_grid(target)?;
        self.check_grid(expr)?;
        if target.as_access().is_none() {
            return Err(SfError::Binding("injection target must be a field access".into()));
        }
        let mut out = Vec::new();
        for (p, cell) in self.cells.iter().enumerate() {
            for c in 0..cell.weights.len() {
                let w = cell.weights[c];
                if w == 0.0 {
                    continue;
                }
                let corner = cell.corner(c);
                let lhs = localize(target, p, &corner);
                let rhs = make_mul(vec![Expr::float(w), localize(expr, p, &corner)]);
                out.push(Equation::inc(lhs, rhs));
            }
        }
        Ok(out)
    }
}

/// Pin relative space indices to `corner` and sparse point indices to `p`.
fn localize(e: &Expr, p: usize, corner: &[usize]) -> Expr {
    let mut map = BTreeMap::new();
    for a in e.accesses() {
        let mut idx = a.indices.clone();
        for (k, d) in a.field.dims.iter().enumerate() {
            match (d.kind(), a.indices[k]) {
                (crate::grid::DimKind::Space(ax), Index::Rel(o)) => idx[k] = Index::Abs(corner[ax] as i64 + o),
                (crate::grid::DimKind::Point, Index::Rel(0)) => idx[k] = Index::Abs(p as i64),
                _ => {}
            }
        }
        map.insert(Expr::access(a.field.clone(), a.indices.clone()), Expr::access(a.field.clone(), idx));
    }
    let out = crate::symbolic::substitute(e, &map);
    debug_assert!(!matches!(out.node(), Node::Deriv(_)));
    out
}

fn csv_err(e: csv::Error) -> SfError {
    SfError::Format(e.to_string())
}

fn parse_record(rec: &csv::StringRecord) -> Result<Vec<f64>> {
    rec.iter()
        .map(|s| s.trim().parse::<f64>().map_err(|e| SfError::Format(format!("{s:?}: {e}"))))
        .collect()
}

/// Write traces `[nt][npoints]` as CSV with header `t,p0,p1,...`.
pub fn write_traces(path: &Path, t0: f64, dt: f64, data: &[f64], npoints: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let header = std::iter::once("t".to_string()).chain((0..npoints).map(|p| format!("p{p}")));
    w.write_record(header).map_err(csv_err)?;
    for (i, row) in data.chunks(npoints.max(1)).enumerate() {
        let t = t0 + i as f64 * dt;
        w.write_record(std::iter::once(t).chain(row.iter().copied()).map(|v| format!("{v:e}")))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read traces written by [`write_traces`]: returns `(times, data, npoints)`.
pub fn read_traces(path: &Path) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if cols.first().map(String::as_str) != Some("t") || cols.iter().skip(1).enumerate().any(|(i, c)| *c != format!("p{i}")) {
        return Err(SfError::Format(format!("bad trace header {cols:?}")));
    }
    let np = cols.len() - 1;
    let (mut times, mut data) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let vals = parse_record(&rec.map_err(csv_err)?)?;
        times.push(vals[0]);
        data.extend_from_slice(&vals[1..]);
    }
    Ok((times, data, np))
}

/// Write point coordinates as CSV with header `x[,y[,z]]`.
pub fn write_coords(path: &Path, coords: &[Vec<f64>]) -> Result<()> {
    let nd = coords.first().map_or(0, |c| c.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&["x", "y", "z"][..nd]).map_err(csv_err)?;
    for c in coords {
        w.write_record(c.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coords(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let nd = cols.len();
    if !(1..=3).contains(&nd) || cols != ["x", "y", "z"][..nd] {
        return Err(SfError::Format(format!("bad coordinate header {cols:?}")));
    }
    r.records().map(|rec| parse_record(&rec.map_err(csv_err)?)).collect()
}
