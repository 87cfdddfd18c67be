use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use stencilforge::fdcoeff::{centered_offsets, fd_weights};
use stencilforge::grid::Dimension;
use stencilforge::symbolic::{
    derivative, expand, expand_derivatives, laplace, simplify_fold, solve_linear, substitute, Equation, Expr,
    FieldRef, Side,
};
use stencilforge::Grid;

const SYMS: [&str; 3] = ["a", "b", "c"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0..3usize).prop_map(|i| Expr::sym(SYMS[i])),
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Expr::rat(n, d)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x + y),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x - y),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x * y),
            (inner.clone(), 1i32..=3).prop_map(|(x, p)| x.pow(p)),
            inner.prop_map(|x| -x),
        ]
    })
}

/// Evaluate with `a, b, c` bound to the given rationals.
fn eval(e: &Expr, vals: [(i64, i64); 3]) -> f64 {
    let map: BTreeMap<Expr, Expr> = SYMS.iter().zip(vals).map(|(s, (n, d))| (Expr::sym(s), Expr::rat(n, d))).collect();
    simplify_fold(&substitute(e, &map)).eval_const().expect("closed expression")
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
}

fn vals() -> impl Strategy<Value = [(i64, i64); 3]> {
    [(-7i64..=7, 1i64..=5), (-7i64..=7, 1i64..=5), (-7i64..=7, 1i64..=5)]
}

proptest! {
    #[test]
    fn sums_and_products_are_canonical(x in expr(), y in expr(), z in expr()) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!((&x + &y) + &z, &x + (&y + &z));
        prop_assert_eq!((&x * &y) * &z, &x * (&y * &z));
    }

    #[test]
    fn canonical_form_preserves_value(e in expr(), v in vals()) {
        let folded = simplify_fold(&e);
        prop_assert!(close(eval(&e, v), eval(&folded, v)));
        prop_assert!(close(eval(&e, v), eval(&expand(&e), v)));
    }

    #[test]
    fn rational_constants_are_exact(n in -50i64..50, d in 1i64..50) {
        let r = Expr::rat(n, d);
        prop_assert_eq!(&r * Expr::int(d), Expr::int(n));
        prop_assert!((&r - &r).is_zero());
        if n != 0 {
            prop_assert!((&r * r.recip()).is_one());
        }
    }

    #[test]
    fn affine_solve_substitutes_back_to_zero(
        k in prop::collection::vec((-5i64..=5, 1i64..=3), 2),
        rest in prop::collection::vec(((-5i64..=5, 1i64..=3), 0..3usize), 1..4),
    ) {
        prop_assume!(k[0].0 * k[1].1 != k[1].0 * k[0].1);
        let g = Grid::new(&[6, 6], &[1.0, 1.0]).unwrap();
        let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
        let target = u.forward();
        let lhs = Expr::rat(k[0].0, k[0].1) * &target
            + rest.iter().map(|((n, d), s)| Expr::rat(*n, *d) * Expr::sym(SYMS[*s])).fold(Expr::zero(), |a, t| a + t);
        let rhs = Expr::rat(k[1].0, k[1].1) * &target + u.center();
        let eq = Equation::new(lhs.clone(), rhs.clone());
        let sol = solve_linear(&eq, &target).unwrap();
        prop_assert!(!sol.contains(&target));
        let map = BTreeMap::from([(target.clone(), sol)]);
        let back = expand(&substitute(&(lhs - rhs), &map));
        prop_assert!(back.is_zero(), "{}", back);
    }

    #[test]
    fn derivative_expansion_is_idempotent(
        axis in 0..2usize,
        order in 1..=2usize,
        half in 1..=4usize,
        side in 0..3usize,
    ) {
        let g = Grid::new(&[12, 12], &[0.5, 0.25]).unwrap();
        let u = FieldRef::time("u", &g, 8, 2, None).unwrap();
        let side = [Side::Centered, Side::Backward, Side::Forward][side];
        let fd = if side == Side::Centered { 2 * half } else { half };
        prop_assume!(side == Side::Centered || order + fd - 1 <= 4);
        let d = derivative(&u.center(), &Dimension::space(axis), order, fd, side).unwrap();
        let e = &d * Expr::sym("a") + u.dt();
        let once = expand_derivatives(&e);
        prop_assert!(!once.has_derivatives());
        prop_assert_eq!(expand_derivatives(&once), once);
    }
}

#[test]
fn laplace_is_sum_of_axis_derivatives() {
    for nd in 1..=3 {
        let g = Grid::new(&vec![10; nd], &vec![1.0; nd]).unwrap();
        let u = FieldRef::time("u", &g, 8, 2, None).unwrap();
        for k in [2, 4, 6, 8] {
            let lap = laplace(&u.center(), k).unwrap();
            let sum = (0..nd)
                .map(|ax| derivative(&u.center(), &Dimension::space(ax), 2, k, Side::Centered).unwrap())
                .fold(Expr::zero(), |a, t| a + t);
            assert_eq!(lap, sum);
            assert_eq!(expand_derivatives(&lap), expand_derivatives(&sum));
        }
    }
}

#[test]
fn second_derivative_weights_differentiate_polynomials_exactly() {
    for k in (2..=16).step_by(2) {
        let offs = centered_offsets(k).unwrap();
        let ws = fd_weights(2, &offs).unwrap();
        for m in 0..=(k as u32 + 1) {
            // Σ w_j j^m equals d²/dx² x^m at 0, i.e. 2 for m = 2, else 0.
            let mut s = BigRational::zero();
            for (&o, w) in ws.offsets.iter().zip(&ws.weights) {
                s += w * BigRational::from_integer(o.into()).pow(m as i32);
            }
            let want = if m == 2 { BigRational::from_integer(2.into()) } else { BigRational::zero() };
            assert_eq!(s, want, "k={k} m={m}");
        }
        for j in 1..=(k as i64 / 2) {
            assert_eq!(ws.weight(j), ws.weight(-j));
        }
        assert_eq!(ws.weights.iter().fold(BigRational::zero(), |a, w| a + w), BigRational::zero());
    }
}

#[test]
fn standard_second_order_weights() {
    let ws = fd_weights(2, &centered_offsets(2).unwrap()).unwrap();
    assert_eq!(ws.weights_f64(), vec![1.0, -2.0, 1.0]);
    let ws = fd_weights(2, &centered_offsets(4).unwrap()).unwrap();
    let want = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    assert_eq!(ws.weights_f64(), want);
}
