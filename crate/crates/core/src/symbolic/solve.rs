//! Expansion, substitution and affine solve-for-target.

use std::collections::BTreeMap;

use super::calculus::expand_derivatives;
use super::equation::Equation;
use super::expr::{make_add, make_mul, make_pow, Expr, Node};
use crate::error::{Result, SfError};

/// Fully distribute products over sums.
pub fn expand(e: &Expr) -> Expr {
    match e.node() {
        Node::Add(ch) => make_add(ch.iter().map(expand).collect()),
        Node::Mul(ch) => distribute(ch.iter().map(expand).collect()),
        Node::Pow(b, p) => {
            let b = expand(b);
            if *p > 1 && matches!(b.node(), Node::Add(_)) {
                distribute(vec![b; *p as usize])
            } else {
                make_pow(b, *p)
            }
        }
        Node::Deriv(_) => e.map_children(expand),
        _ => e.clone(),
    }
}

fn distribute(factors: Vec<Expr>) -> Expr {
    let mut terms = vec![Expr::one()];
    for f in factors {
        terms = match f.node() {
            Node::Add(ch) => terms
                .iter()
                .flat_map(|t| ch.iter().map(move |c| make_mul(vec![t.clone(), c.clone()])))
                .collect(),
            _ => terms.into_iter().map(|t| make_mul(vec![t, f.clone()])).collect(),
        };
    }
    make_add(terms)
}

/// Simultaneous substitution; replacements are not revisited.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Expr, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    if let Some(r) = bindings.get(e) {
        return r.clone();
    }
    if e.is_leaf() {
        return e.clone();
    }
    e.map_children(|c| substitute(c, bindings))
}

/// Rebuild bottom-up through the canonical constructors.
pub fn simplify_fold(e: &Expr) -> Expr {
    if e.is_leaf() {
        return e.clone();
    }
    e.map_children(simplify_fold)
}

/// Split `e` into `coeff * target + rest`.
pub fn collect_linear(e: &Expr, target: &Expr) -> Result<(Expr, Expr)> {
    if e == target {
        return Ok((Expr::one(), Expr::zero()));
    }
    if !e.contains(target) {
        return Ok((Expr::zero(), e.clone()));
    }
    match e.node() {
        Node::Add(ch) => {
            let mut coeffs = Vec::new();
            let mut rests = Vec::new();
            for c in ch {
                let (a, b) = collect_linear(c, target)?;
                coeffs.push(a);
                rests.push(b);
            }
            Ok((make_add(coeffs), make_add(rests)))
        }
        Node::Mul(ch) => {
            let holders: Vec<usize> = (0..ch.len()).filter(|&i| ch[i].contains(target)).collect();
            if holders.len() != 1 {
                return Err(SfError::NotLinear(target.to_string()));
            }
            let i = holders[0];
            let (a, b) = collect_linear(&ch[i], target)?;
            let others: Vec<Expr> = ch.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
            let p = make_mul(others);
            Ok((make_mul(vec![p.clone(), a]), make_mul(vec![p, b])))
        }
        _ => Err(SfError::NotLinear(target.to_string())),
    }
}

fn has_sum(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |n| found |= matches!(n.node(), Node::Add(_)));
    found
}

/// Closed form for `target` from an equation affine in it.
pub fn solve_linear(eq: &Equation, target: &Expr) -> Result<Expr> {
    let e = expand_derivatives(&(&eq.lhs - &eq.rhs));
    let (coeff, rest) = collect_linear(&e, target)?;
    if expand(&coeff).is_zero() {
        return Err(SfError::Singular(target.to_string()));
    }
    if rest.contains(target) {
        return Err(SfError::NotLinear(target.to_string()));
    }
    Ok(if has_sum(&coeff) {
        make_mul(vec![make_pow(coeff, -1), expand(&-rest)])
    } else {
        expand(&make_mul(vec![Expr::int(-1), make_pow(coeff, -1), rest]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::symbolic::function::FieldRef;

    #[test]
    fn trivial_affine_solve() {
        let (a, b, x) = (Expr::sym("a"), Expr::sym("b"), Expr::sym("x"));
        let eq = Equation::new(&a * &x + &b, Expr::zero());
        assert_eq!(solve_linear(&eq, &x).unwrap(), -&b / &a);
    }

    #[test]
    fn nonlinear_and_singular() {
        let (a, x) = (Expr::sym("a"), Expr::sym("x"));
        let eq = Equation::new(&x * &x + &a, Expr::zero());
        assert!(matches!(solve_linear(&eq, &x), Err(SfError::NotLinear(_))));
        let eq = Equation::new(&a + 1, Expr::zero());
        assert!(matches!(solve_linear(&eq, &x), Err(SfError::Singular(_))));
        let eq = Equation::new(&x - &x + &a, Expr::zero());
        assert!(matches!(solve_linear(&eq, &x), Err(SfError::Singular(_))));
    }

    #[test]
    fn acoustic_update() {
        let g = Grid::new(&[10, 10], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        let m = FieldRef::dense("m", &g, 2).unwrap();
        let pde = m.center() * u.dt2() - u.laplace();
        let upd = solve_linear(&Equation::new(pde, Expr::zero()), &u.forward()).unwrap();
        let dt = Expr::sym("dt");
        let lap = expand_derivatives(&u.laplace());
        let want = expand(&(2 * u.center() - u.backward() + dt.pow(2) / m.center() * lap));
        assert_eq!(upd, want);
    }

    #[test]
    fn substitution_examples() {
        let x = Expr::sym("x");
        let mut b = BTreeMap::new();
        assert_eq!(substitute(&(&x + 1), &b), &x + 1);
        b.insert(x.clone(), Expr::int(2));
        assert_eq!(substitute(&(&x + 1), &b), Expr::int(3));
        // Simultaneous: x -> y, y -> x swaps.
        let y = Expr::sym("y");
        let mut sw = BTreeMap::new();
        sw.insert(x.clone(), y.clone());
        sw.insert(y.clone(), x.clone());
        assert_eq!(substitute(&(&x - 2 * y.clone()), &sw), &y - 2 * x.clone());
    }

    #[test]
    fn expand_distributes() {
        let (a, b, c) = (Expr::sym("a"), Expr::sym("b"), Expr::sym("c"));
        let e = (&a + &b) * (&a - &c);
        assert_eq!(expand(&e), a.pow(2) - &a * &c + &a * &b - &b * &c);
        assert_eq!(expand(&(&a + &b).pow(2)), a.pow(2) + 2 * (&a * &b) + b.pow(2));
    }
}
