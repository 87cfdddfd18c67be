mod common;

use common::{bitwise_eq, max_rel_diff, random_acoustic};
use stencilforge::backend::gridio::{decode, encode, header_len};
use stencilforge::backend::{emit_c99, execute_with, read_sfgd, run_emitted, toolchain_available, write_sfgd};
use stencilforge::backend::{Array, Bindings, ExecOptions, Precision};
use stencilforge::cfd::{box_field, dipole_rhs, Burgers, Convection, Poisson};
use stencilforge::compiler::Operator;
use stencilforge::seismic::AcousticSolver;
use stencilforge::Grid;

fn interpreter_vs_c(op: &Operator, b: &Bindings, arrays: &[&str]) -> f64 {
    let mut x = b.clone();
    let mut y = b.clone();
    execute_with(op, &mut x, &ExecOptions::serial()).unwrap();
    run_emitted(op, &emit_c99(op).unwrap(), &mut y).unwrap();
    arrays.iter().map(|n| max_rel_diff(x.array(n).unwrap(), y.array(n).unwrap())).fold(0.0, f64::max)
}

#[test]
fn emitted_acoustic_matches_interpreter() {
    if !toolchain_available() {
        eprintln!("capability notice: no C compiler, skipping");
        return;
    }
    let (model, geom) = random_acoustic(&[40, 36], 8, 102, 5);
    let solver = AcousticSolver::new(&model, &geom).unwrap();
    for save in [false, true] {
        let b = solver.forward_bindings(&model, &geom.src_data, save).unwrap();
        let err = interpreter_vs_c(solver.forward_operator(save), &b, &["u", "rec"]);
        assert!(err <= 1e-12, "save={save}: {err}");
    }
}

#[test]
fn emitted_cfd_operators_match_interpreter() {
    if !toolchain_available() {
        eprintln!("capability notice: no C compiler, skipping");
        return;
    }
    let (grid, init) = Convection::hat(21).unwrap();
    let conv = Convection::new(&grid, 1.0, 0.02).unwrap();
    let mut b = conv.op.bindings();
    b.set_scalar("c", 1.0);
    b.set_scalar("dt", 0.02);
    b.set_interior(&conv.u, Some(0), &init).unwrap();
    b.set_interior(&conv.u, Some(1), &init).unwrap();
    b.set_time_range(0, 9);
    assert!(interpreter_vs_c(&conv.op, &b, &["u"]) <= 1e-12);

    let h = 0.1;
    let g = Grid::new(&[21, 21], &[h, h]).unwrap();
    let burgers = Burgers::new(&g, 0.01, 0.0009 * h * h / 0.01).unwrap();
    let mut b = burgers.op.bindings();
    b.set_scalar("dt", burgers.dt);
    b.set_scalar("nu", 0.01);
    let init = box_field(&g, 0.5, 1.0, 1.0, 2.0);
    for f in [&burgers.u, &burgers.v] {
        b.set_interior(f, Some(0), &init).unwrap();
    }
    b.set_time_range(0, 9);
    assert!(interpreter_vs_c(&burgers.op, &b, &["u", "v"]) <= 1e-12);

    let ps = Poisson::classic().unwrap();
    let mut b = ps.op.bindings();
    b.set_interior(&ps.b, None, &dipole_rhs(&[50, 50], 100.0)).unwrap();
    b.set_time_range(0, 19);
    assert!(interpreter_vs_c(&ps.op, &b, &["p"]) <= 1e-12);
}

#[test]
fn serial_execution_is_reproducible() {
    let (model, geom) = random_acoustic(&[30, 30], 4, 40, 9);
    let mut s = AcousticSolver::new(&model, &geom).unwrap();
    s.exec = ExecOptions::serial();
    let a = s.forward(&model, false).unwrap();
    let b = s.forward(&model, false).unwrap();
    assert!(bitwise_eq(&a.traces, &b.traces));
    s.exec = ExecOptions::default();
    let c = s.forward(&model, false).unwrap();
    assert!(bitwise_eq(&a.traces, &c.traces));
}

#[test]
fn single_precision_stays_close() {
    let (model, geom) = random_acoustic(&[30, 30], 4, 40, 9);
    let mut s = AcousticSolver::new(&model, &geom).unwrap();
    s.exec = ExecOptions::serial();
    let d = s.forward(&model, false).unwrap().traces;
    s.exec.precision = Precision::F32;
    let f = s.forward(&model, false).unwrap().traces;
    let err = max_rel_diff(&d, &f);
    assert!(err > 0.0 && err < 1e-4, "{err}");
}

#[test]
fn grid_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for shape in [vec![7], vec![3, 5], vec![2, 3, 4]] {
        let n: usize = shape.iter().product();
        let a = Array::from_vec(&shape, (0..n).map(|i| i as f64 * 0.25 - 1.0).collect()).unwrap();
        let path = dir.path().join(format!("f{}.sfgd", shape.len()));
        write_sfgd(&path, &a).unwrap();
        assert_eq!(read_sfgd(&path).unwrap(), a);
        let bytes = encode(&a);
        assert_eq!(&bytes[..4], b"SFGD");
        assert_eq!(header_len(shape.len()) % 8, 0);
        assert_eq!(bytes.len(), header_len(shape.len()) + 8 * n);
        assert_eq!(decode(&bytes).unwrap(), a);
    }
    assert!(decode(b"XXXX\x01\x00\x00\x00").is_err());
}
