mod common;

use common::{bitwise_eq, max_rel_diff, random_acoustic, run_forward};
use stencilforge::backend::ExecOptions;
use stencilforge::compiler::flops::body_flops_exact;
use stencilforge::compiler::{CompileOptions, FlopCount, Operator};
use stencilforge::seismic::AcousticSolver;
use stencilforge::symbolic::{solve_linear, Equation, Expr, FieldRef};
use stencilforge::Grid;

fn only(f: impl FnOnce(&mut CompileOptions)) -> CompileOptions {
    let mut o = CompileOptions::none();
    f(&mut o);
    o
}

#[test]
fn reordering_free_passes_are_bitwise_identical() {
    for (shape, order) in [(vec![24, 20], 4), (vec![16, 14, 12], 8)] {
        let (model, geom) = random_acoustic(&shape, order, 30, 7);
        let (tr0, u0) = run_forward(&model, &geom, CompileOptions::none());
        assert!(u0.max_abs() > 0.0);
        let tiles = vec![5; shape.len()];
        for (name, opts) in [
            ("cse", only(|o| o.cse = true)),
            ("hoist", only(|o| o.hoist = true)),
            ("block", only(|o| o.tiles = Some(tiles.clone()))),
            ("cse+hoist+block", only(|o| {
                o.cse = true;
                o.hoist = true;
                o.tiles = Some(tiles.clone());
            })),
        ] {
            let (tr, u) = run_forward(&model, &geom, opts);
            assert!(bitwise_eq(&u, &u0), "{name} changed the wavefield ({:?})", shape);
            assert!(bitwise_eq(&tr, &tr0), "{name} changed the traces ({:?})", shape);
        }
    }
}

#[test]
fn factorization_agrees_to_roundoff() {
    for (shape, order) in [(vec![24, 20], 8), (vec![14, 14, 14], 4)] {
        let (model, geom) = random_acoustic(&shape, order, 30, 11);
        let (tr0, u0) = run_forward(&model, &geom, CompileOptions::none());
        for opts in [only(|o| o.factorize = true), CompileOptions::default()] {
            let (tr, u) = run_forward(&model, &geom, opts);
            assert!(max_rel_diff(&u, &u0) <= 1e-12);
            assert!(max_rel_diff(&tr, &tr0) <= 1e-12);
        }
    }
}

#[test]
fn cse_and_factorize_reduce_flops() {
    let (model, geom) = random_acoustic(&[20, 20, 20], 8, 5, 3);
    let flops = |opts| AcousticSolver::with_options(&model, &geom, opts).unwrap().forward_operator(false).meta.flops_per_point;
    let base = flops(CompileOptions::none());
    let both = flops(only(|o| {
        o.cse = true;
        o.factorize = true;
    }));
    assert!(both < base, "{both} !< {base}");
    assert!(flops(only(|o| o.cse = true)) <= base);
    assert!(flops(only(|o| o.factorize = true)) <= base);
}

#[test]
fn ir_dump_is_deterministic() {
    let (model, geom) = random_acoustic(&[12, 12], 4, 5, 1);
    let a = AcousticSolver::new(&model, &geom).unwrap();
    let b = AcousticSolver::new(&model, &geom).unwrap();
    let (da, db) = (a.forward_operator(true).dump(), b.forward_operator(true).dump());
    assert_eq!(da, db);
    assert!(da.lines().any(|l| l.trim_start().starts_with("for")));
    let meta = a.forward_operator(false).metadata_json();
    for key in ["flops", "bytes", "oi", "tiles"] {
        assert!(meta.get(key).is_some(), "metadata lacks {key}");
    }
}

#[test]
fn one_dimensional_update_has_hand_counted_flops() {
    // -2*c*dt**2*u/h**2 - u[t-1] + 2*u + c*dt**2*u[x-1]/h**2 + c*dt**2*u[x+1]/h**2
    // adds: 4; muls: (4 + 1 + 1) + 1 + (3 + 1 + 1) * 2 = 17; divs: one per h**-2.
    let g = Grid::new(&[10], &[1.0]).unwrap();
    let u = FieldRef::time("u", &g, 2, 2, None).unwrap();
    let eq = Equation::new(u.dt2(), Expr::sym("c") * u.laplace());
    let rhs = solve_linear(&eq, &u.forward()).unwrap();
    let op = Operator::with_options(&[Equation::new(u.forward(), rhs)], CompileOptions::none()).unwrap();
    assert_eq!(op.meta.flops, FlopCount { adds: 4, muls: 17, divs: 3 });
    assert_eq!(op.meta.bytes_per_point, 3 * 8);
}

#[test]
fn reported_flops_are_body_count_times_steps() {
    for order in [2, 4, 8] {
        let (model, geom) = random_acoustic(&[16, 16], order, 6, 2);
        let mut s = AcousticSolver::with_options(&model, &geom, CompileOptions::none()).unwrap();
        s.exec = ExecOptions::serial();
        let op = s.forward_operator(false);
        let exact = body_flops_exact(&op.ir) as u64;
        let run = s.forward(&model, false).unwrap();
        assert_eq!(run.report.steps, geom.nt - 2);
        assert_eq!(run.report.flops, exact * run.report.steps as u64);
        let points: usize = model.m.shape().iter().product();
        assert!(exact >= (op.meta.flops_per_point * points) as u64);
    }
}
