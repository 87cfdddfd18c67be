//! Derivative placeholders and their expansion into weighted stencils.

use super::expr::{make_add, make_mul, make_pow, Derivative, Expr, Index, Node, Side};
use crate::error::{Result, SfError};
use crate::fdcoeff::fd_weights;
use crate::grid::Dimension;

/// Stencil offsets for a derivative of `order` with accuracy `fd_order`.
pub fn stencil_offsets(order: usize, fd_order: usize, side: Side) -> Result<Vec<i64>> {
    if order < 1 {
        return Err(SfError::Order("derivative order must be >= 1".into()));
    }
    if fd_order < 1 {
        return Err(SfError::Order("accuracy order must be >= 1".into()));
    }
    let n = (order + fd_order - 1) as i64;
    Ok(match side {
        Side::Centered => {
            if !fd_order.is_multiple_of(2) {
                return Err(SfError::Order(format!("centered stencils need an even order, got {fd_order}")));
            }
            let r = n / 2;
            (-r..=r).collect()
        }
        Side::Backward => (-n..=0).collect(),
        Side::Forward => (0..=n).collect(),
    })
}

/// Build a derivative placeholder after validating stencil reach against halos.
pub fn derivative(e: &Expr, dim: &Dimension, order: usize, fd_order: usize, side: Side) -> Result<Expr> {
    let offsets = stencil_offsets(order, fd_order, side)?;
    let reach = offsets.iter().map(|o| o.unsigned_abs() as usize).max().unwrap_or(0);
    if dim.axis().is_some() {
        for a in e.accesses() {
            if a.field.is_sparse() || !a.field.dims.contains(dim) {
                continue;
            }
            if side == Side::Centered && fd_order > a.field.space_order {
                return Err(SfError::Order(format!(
                    "fd_order {fd_order} exceeds space_order {} of {}",
                    a.field.space_order, a.field.name
                )));
            }
            if reach > a.field.halo() {
                return Err(SfError::Order(format!(
                    "stencil reach {reach} exceeds halo {} of {}",
                    a.field.halo(),
                    a.field.name
                )));
            }
        }
    }
    Ok(Expr::deriv(Derivative { expr: e.clone(), dim: dim.clone(), order, fd_order, side }))
}

/// Sum of centered second derivatives over every space dimension of `e`'s grid.
pub fn laplace(e: &Expr, fd_order: usize) -> Result<Expr> {
    let ndim = e
        .accesses()
        .iter()
        .find(|a| !a.field.is_sparse())
        .map(|a| a.field.grid.ndim())
        .ok_or_else(|| SfError::Parameter("laplace needs a grid field".into()))?;
    let terms = (0..ndim)
        .map(|ax| derivative(e, &Dimension::space(ax), 2, fd_order, Side::Centered))
        .collect::<Result<Vec<_>>>()?;
    Ok(make_add(terms))
}

/// Shift every relative index along `dim` by `k`.
pub fn shift(e: &Expr, dim: &Dimension, k: i64) -> Expr {
    if k == 0 {
        return e.clone();
    }
    match e.node() {
        Node::Access(a) => match a.field.dims.iter().position(|d| d == dim) {
            Some(p) => match a.indices[p] {
                Index::Rel(r) => {
                    let mut idx = a.indices.clone();
                    idx[p] = Index::Rel(r + k);
                    Expr::access(a.field.clone(), idx)
                }
                Index::Abs(_) => e.clone(),
            },
            None => e.clone(),
        },
        Node::Rat(_) | Node::Float(_) | Node::Sym(_) => e.clone(),
        _ => e.map_children(|c| shift(c, dim, k)),
    }
}

/// Replace every derivative placeholder by its weighted stencil sum.
pub fn expand_derivatives(e: &Expr) -> Expr {
    if !e.has_derivatives() {
        return e.clone();
    }
    match e.node() {
        Node::Deriv(d) => {
            let inner = expand_derivatives(&d.expr);
            let offsets = stencil_offsets(d.order, d.fd_order, d.side).expect("validated at construction");
            let ws = fd_weights(d.order, &offsets).expect("offsets sized for the derivative order");
            let terms = ws
                .offsets
                .iter()
                .zip(&ws.weights)
                .map(|(&o, w)| make_mul(vec![Expr::rational(w.clone()), shift(&inner, &d.dim, o)]))
                .collect();
            let h = Expr::sym(&d.dim.spacing_name());
            make_mul(vec![make_pow(h, -(d.order as i32)), make_add(terms)])
        }
        _ => e.map_children(expand_derivatives),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::symbolic::function::FieldRef;

    #[test]
    fn dt2_expands_to_three_levels() {
        let g = Grid::new(&[8, 8], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        let got = expand_derivatives(&u.dt2());
        let dt = Expr::sym("dt");
        let want = (u.forward() - 2 * u.center() + u.backward()) / dt.pow(2);
        assert_eq!(got, want);
    }

    #[test]
    fn dx_central_difference() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let u = FieldRef::dense("u", &g, 2).unwrap();
        let got = expand_derivatives(&u.dx());
        let h = Expr::sym("h_x");
        let want = (u.at(0, &[1]) - u.at(0, &[-1])) / (2 * h);
        assert_eq!(expand_derivatives(&got), got);
        assert_eq!(crate::symbolic::solve::expand(&got), crate::symbolic::solve::expand(&want));
    }

    #[test]
    fn five_point_laplacian() {
        let g = Grid::new(&[8, 8], &[1.0, 1.0]).unwrap();
        let u = FieldRef::dense("u", &g, 2).unwrap();
        let lap = expand_derivatives(&u.laplace());
        let h = Expr::sym("h");
        let mut bind = std::collections::BTreeMap::new();
        bind.insert(Expr::sym("h_x"), h.clone());
        bind.insert(Expr::sym("h_y"), h.clone());
        let got = crate::symbolic::solve::expand(&crate::symbolic::solve::substitute(&lap, &bind));
        let want = crate::symbolic::solve::expand(
            &((u.at(0, &[1, 0]) + u.at(0, &[-1, 0]) + u.at(0, &[0, 1]) + u.at(0, &[0, -1]) - 4 * u.center())
                / h.pow(2)),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn fourth_order_dx2_weights() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let u = FieldRef::dense("u", &g, 4).unwrap();
        let got = expand_derivatives(&u.dx2());
        let w = [(-2, Expr::rat(-1, 12)), (-1, Expr::rat(4, 3)), (0, Expr::rat(-5, 2)), (1, Expr::rat(4, 3)), (2, Expr::rat(-1, 12))];
        let sum = make_add(w.iter().map(|(o, c)| c * u.at(0, &[*o])).collect());
        assert_eq!(got, sum / Expr::sym("h_x").pow(2));
    }

    #[test]
    fn order_exceeding_space_order_is_rejected() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let u = FieldRef::dense("u", &g, 2).unwrap();
        let r = derivative(&u.center(), &Dimension::space(0), 2, 4, Side::Centered);
        assert!(matches!(r, Err(SfError::Order(_))));
    }

    #[test]
    fn no_placeholders_is_identity() {
        let x = Expr::sym("x") + 1;
        assert_eq!(expand_derivatives(&x), x);
    }

    #[test]
    fn time_derivative_of_invariant_field_vanishes() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let m = FieldRef::dense("m", &g, 2).unwrap();
        let d = derivative(&m.center(), &Dimension::time(), 1, 2, Side::Centered).unwrap();
        assert!(expand_derivatives(&d).is_zero());
    }
}
