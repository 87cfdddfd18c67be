//! Lowering of equation lists to the loop-nest IR.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::ir::{Assignment, Direction, LoopNestIR, Nest, PointBlock, Section, Target, TimeLoop};
use crate::error::{Result, SfError};
use crate::grid::{DimKind, Grid};
use crate::symbolic::{expand_derivatives, Access, Equation, Index, Region};

/// Storage slot identity of an access: two accesses with equal keys touch the
/// same array level at each time step.
fn slot_key(a: &Access) -> (String, i64) {
    let tau = a.time_offset().unwrap_or(0);
    let key = match a.field.time_len() {
        Some(len) if a.field.is_buffered() => tau.rem_euclid(len as i64),
        _ => tau,
    };
    (a.field.name.clone(), key)
}

fn has_space_offset(a: &Access) -> bool {
    a.field
        .dims
        .iter()
        .zip(&a.indices)
        .any(|(d, i)| d.axis().is_some() && matches!(i, Index::Rel(o) if *o != 0))
}

/// Time direction implied by the left-hand sides.
///
/// Returns `None` when no equation is time-dependent.
pub fn detect_time_direction(eqs: &[Equation]) -> Result<Option<Direction>> {
    let mut any_time = false;
    let (mut fwd, mut bwd) = (false, false);
    for eq in eqs {
        for a in eq.lhs.accesses().iter().chain(eq.rhs.accesses().iter()) {
            any_time |= a.field.is_time_dependent();
        }
        if let Some(a) = eq.lhs.as_access() {
            if a.field.is_sparse() {
                continue;
            }
            match a.time_offset() {
                Some(o) if o > 0 => fwd = true,
                Some(o) if o < 0 => bwd = true,
                _ => {}
            }
        }
    }
    if fwd && bwd {
        return Err(SfError::Scheduling("equations update both t+k and t-k".into()));
    }
    Ok(match (any_time, bwd) {
        (false, _) => None,
        (true, true) => Some(Direction::Backward),
        (true, false) => Some(Direction::Forward),
    })
}

#[derive(PartialEq, Clone, Copy)]
enum PointKind {
    Inject,
    Interp,
}

enum Lowered {
    Dense { grid: Arc<Grid>, bounds: Vec<(usize, usize)>, asg: Assignment },
    Point { kind: PointKind, asg: Assignment },
}

fn check_space_bounds(a: &Access, bounds: Option<&[(usize, usize)]>) -> Result<()> {
    let h = a.field.halo() as i64;
    for (d, idx) in a.field.dims.iter().zip(&a.indices) {
        let ax = match d.kind() {
            DimKind::Space(ax) => ax,
            DimKind::Point => {
                let np = a.field.data_shape()[1] as i64;
                match idx {
                    Index::Abs(p) if (0..np).contains(p) => continue,
                    Index::Abs(p) => return Err(SfError::Lowering(format!("point {p} out of range for {}", a.field.name))),
                    Index::Rel(_) => {
                        return Err(SfError::Lowering(format!(
                            "sparse function {} needs a fixed point index here",
                            a.field.name
                        )))
                    }
                }
            }
            DimKind::Time => {
                if matches!(idx, Index::Abs(_)) {
                    return Err(SfError::Lowering(format!("absolute time index on {}", a.field.name)));
                }
                continue;
            }
        };
        let n = a.field.grid.shape()[ax] as i64;
        match (idx, bounds) {
            (Index::Abs(i), _) => {
                if *i < -h || *i >= n + h {
                    return Err(SfError::Lowering(format!("index {i} outside {} along {d}", a.field.name)));
                }
            }
            (Index::Rel(o), Some(b)) => {
                let (lo, hi) = (b[ax].0 as i64, b[ax].1 as i64);
                if lo < hi && (lo + o < -h || hi - 1 + o > n - 1 + h) {
                    return Err(SfError::Lowering(format!(
                        "access {} offset {o} along {d} reaches beyond its halo of {h}",
                        a.field.name
                    )));
                }
            }
            (Index::Rel(_), None) => {
                return Err(SfError::Lowering(format!(
                    "point update reads {} at a relative position along {d}",
                    a.field.name
                )))
            }
        }
    }
    Ok(())
}

fn lower_one(eq: &Equation) -> Result<Lowered> {
    let lhs = eq
        .lhs
        .as_access()
        .ok_or_else(|| SfError::Lowering(format!("left-hand side {} is not a field access", eq.lhs)))?
        .clone();
    let asg = Assignment { target: Target::Field(lhs.clone()), value: eq.rhs.clone(), accumulate: eq.accumulate };
    let reads = eq.rhs.accesses();
    let is_point = lhs.field.is_sparse()
        || lhs.field.dims.iter().zip(&lhs.indices).any(|(d, i)| d.axis().is_some() && matches!(i, Index::Abs(_)));
    if is_point {
        if eq.region.is_some() {
            return Err(SfError::Lowering("point updates take no region".into()));
        }
        for a in std::iter::once(&lhs).chain(reads.iter()) {
            check_space_bounds(a, None)?;
        }
        let kind = if lhs.field.is_sparse() { PointKind::Interp } else { PointKind::Inject };
        return Ok(Lowered::Point { kind, asg });
    }
    if lhs.field.dims.iter().zip(&lhs.indices).any(|(d, i)| d.axis().is_some() && *i != Index::Rel(0)) {
        return Err(SfError::Lowering(format!("left-hand side {} must sit at the loop point", eq.lhs)));
    }
    let grid = lhs.field.grid.clone();
    for a in &reads {
        if !a.field.is_sparse() && *a.field.grid != *grid {
            return Err(SfError::Lowering(format!(
                "{} and {} live on different grids",
                a.field.name, lhs.field.name
            )));
        }
    }
    let region = eq.region.clone().unwrap_or_else(|| Region::full(grid.ndim()));
    let bounds = region.resolve(grid.shape())?;
    for a in std::iter::once(&lhs).chain(reads.iter()) {
        check_space_bounds(a, Some(&bounds))?;
    }
    let own = slot_key(&lhs);
    if reads.iter().any(|a| slot_key(a) == own && has_space_offset(a)) {
        return Err(SfError::Lowering(format!(
            "{} reads its own target at a neighbouring point (loop-carried dependence)",
            eq.lhs
        )));
    }
    Ok(Lowered::Dense { grid, bounds, asg })
}

fn reads_of(a: &Assignment) -> BTreeSet<Access> {
    a.value.accesses()
}

fn fusable(body: &[Assignment], next: &Assignment) -> bool {
    let writes: BTreeSet<(String, i64)> = body
        .iter()
        .chain(std::iter::once(next))
        .filter_map(|a| match &a.target {
            Target::Field(acc) => Some(slot_key(acc)),
            Target::Temp(_) => None,
        })
        .collect();
    body.iter()
        .chain(std::iter::once(next))
        .all(|a| reads_of(a).iter().all(|r| !(has_space_offset(r) && writes.contains(&slot_key(r)))))
}

/// Lower equations to a scheduled IR; derivative placeholders are expanded first.
pub fn lower(eqs: &[Equation]) -> Result<LoopNestIR> {
    if eqs.is_empty() {
        return Err(SfError::Lowering("no equations".into()));
    }
    let expanded: Vec<Equation> = eqs
        .iter()
        .map(|e| Equation {
            lhs: expand_derivatives(&e.lhs),
            rhs: expand_derivatives(&e.rhs),
            region: e.region.clone(),
            accumulate: e.accumulate,
        })
        .collect();
    let direction = detect_time_direction(&expanded)?;

    let mut all: Vec<Access> = Vec::new();
    for e in &expanded {
        all.extend(e.lhs.accesses());
        all.extend(e.rhs.accesses());
    }
    let mut time = None;
    if let Some(direction) = direction {
        let offs: Vec<i64> = all.iter().filter_map(|a| a.time_offset()).collect();
        let min_offset = offs.iter().copied().min().unwrap_or(0);
        let max_offset = offs.iter().copied().max().unwrap_or(0);
        time = Some(TimeLoop { direction, min_offset, max_offset });
        for a in all.iter().filter(|a| a.field.is_buffered()) {
            let fo: Vec<i64> = all.iter().filter(|b| b.field == a.field).filter_map(|b| b.time_offset()).collect();
            let span = fo.iter().max().unwrap() - fo.iter().min().unwrap() + 1;
            if span > a.field.time_len().unwrap() as i64 {
                return Err(SfError::Lowering(format!(
                    "{} is accessed over {span} time levels but buffers only {}",
                    a.field.name,
                    a.field.time_len().unwrap()
                )));
            }
        }
    }

    let mut body: Vec<Section> = Vec::new();
    let mut last_point_kind = None;
    for eq in &expanded {
        match lower_one(eq)? {
            Lowered::Dense { grid, bounds, asg } => {
                last_point_kind = None;
                if let Some(Section::Nest(n)) = body.last_mut() {
                    if n.bounds == bounds && *n.grid == *grid && fusable(&n.body, &asg) {
                        n.body.push(asg);
                        continue;
                    }
                }
                body.push(Section::Nest(Nest::new(grid, bounds, vec![asg])));
            }
            Lowered::Point { kind, asg } => {
                if last_point_kind == Some(kind) {
                    if let Some(Section::Points(p)) = body.last_mut() {
                        p.body.push(asg);
                        continue;
                    }
                }
                last_point_kind = Some(kind);
                body.push(Section::Points(PointBlock { body: vec![asg] }));
            }
        }
    }
    Ok(LoopNestIR { scalars: vec![], prologue: vec![], time, body, temporaries: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{solve_linear, FieldRef};

    fn setup() -> (Arc<Grid>, FieldRef, FieldRef) {
        let g = Grid::new(&[12, 12], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        let m = FieldRef::dense("m", &g, 2).unwrap();
        (g, u, m)
    }

    #[test]
    fn single_stencil_nest() {
        let (_, u, m) = setup();
        let pde = m.center() * u.dt2() - u.laplace();
        let st = solve_linear(&Equation::new(pde, 0), &u.forward()).unwrap();
        let ir = lower(&[Equation::new(u.forward(), st)]).unwrap();
        let t = ir.time.as_ref().unwrap();
        assert_eq!(t.direction, Direction::Forward);
        assert_eq!((t.min_offset, t.max_offset), (-1, 1));
        assert_eq!(ir.body.len(), 1);
        let n = ir.nests().next().unwrap();
        assert_eq!(n.bounds, vec![(0, 12), (0, 12)]);
        assert_eq!(n.loops.len(), 2);
        assert!(n.loops[1].vectorizable && !n.loops[0].vectorizable);
    }

    #[test]
    fn directions() {
        let (_, u, _) = setup();
        let f = [Equation::new(u.forward(), u.center())];
        let b = [Equation::new(u.backward(), u.center())];
        assert_eq!(detect_time_direction(&f).unwrap(), Some(Direction::Forward));
        assert_eq!(detect_time_direction(&b).unwrap(), Some(Direction::Backward));
        let mixed = [f[0].clone(), b[0].clone()];
        assert!(matches!(detect_time_direction(&mixed), Err(SfError::Scheduling(_))));
        let g = Grid::new(&[5], &[1.0]).unwrap();
        let p = FieldRef::dense("p", &g, 2).unwrap();
        let q = FieldRef::dense("q", &g, 2).unwrap();
        assert_eq!(detect_time_direction(&[Equation::new(p.center(), q.dx2())]).unwrap(), None);
    }

    #[test]
    fn time_invariant_only_has_no_time_loop() {
        let g = Grid::new(&[6, 6], &[1.0, 1.0]).unwrap();
        let p = FieldRef::dense("p", &g, 2).unwrap();
        let q = FieldRef::dense("q", &g, 2).unwrap();
        let ir = lower(&[Equation::new(p.center(), q.laplace()).with_region(Region::interior(2, 1))]).unwrap();
        assert!(ir.time.is_none());
        assert_eq!(ir.nests().next().unwrap().bounds, vec![(1, 5), (1, 5)]);
    }

    #[test]
    fn self_dependence_rejected() {
        let (_, u, _) = setup();
        let eq = Equation::new(u.forward(), u.at(1, &[-1, 0]));
        assert!(matches!(lower(&[eq]), Err(SfError::Lowering(_))));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let (_, u, _) = setup();
        let g2 = Grid::new(&[10, 12], &[1.0, 1.0]).unwrap();
        let w = FieldRef::dense("w", &g2, 2).unwrap();
        assert!(matches!(lower(&[Equation::new(u.forward(), w.center())]), Err(SfError::Lowering(_))));
    }

    #[test]
    fn fission_on_neighbour_read() {
        let (_, u, m) = setup();
        let v = FieldRef::time("v", &u.grid, 2, 2, None).unwrap();
        let eqs = [Equation::new(u.forward(), u.center() + m.center()), Equation::new(v.forward(), u.at(1, &[1, 0]))];
        let ir = lower(&eqs).unwrap();
        assert_eq!(ir.body.len(), 2);
        let eqs = [Equation::new(u.forward(), u.center() + m.center()), Equation::new(v.forward(), u.at(1, &[0, 0]) * 2)];
        assert_eq!(lower(&eqs).unwrap().body.len(), 1);
    }

    #[test]
    fn buffer_too_small() {
        let (_, u, _) = setup();
        let eq = Equation::new(u.forward(), u.center() + u.at(-2, &[]));
        assert!(matches!(lower(&[eq]), Err(SfError::Lowering(_))));
    }
}
