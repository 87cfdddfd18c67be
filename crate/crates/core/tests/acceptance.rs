//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{bitwise_eq, max_rel_diff, random_acoustic, run_forward};
use stencilforge::backend::{emit_c99, execute_with, run_emitted, toolchain_available, Array, ExecOptions};
use stencilforge::cfd::{box_field, dipole_rhs, min_max, Burgers, Convection, Poisson};
use stencilforge::compiler::CompileOptions;
use stencilforge::seismic::{two_layer_velocity, AcousticSolver, DampingProfile, Geometry, Model};
use stencilforge::verify::{
    adjoint_test, convergence_space, convergence_time, gradient_test, inversion_test, oi_by_order, sparse_matrices,
    volume_scaling, AdjointConfig, BenchConfig, GradientConfig, InversionConfig, SpaceConvergenceConfig,
    TimeConvergenceConfig,
};
use stencilforge::{Grid, Result};

// Tolerances.
const TIME_SLOPE: (f64, f64) = (1.8, 2.1);
const TIME_MIN_POINTS: usize = 4;
const SPACE_ORDERS: [usize; 4] = [2, 4, 6, 8];
const SPACE_SLOPE_TOL: f64 = 0.25;
const DOT_TOL: f64 = 1e-12;
const TAYLOR0: (f64, f64) = (0.85, 1.15);
const TAYLOR1: (f64, f64) = (1.85, 2.15);
const TAYLOR_H_RANGE: (f64, f64) = (1e-6, 1.0);
const FD_GRADIENT_TOL: f64 = 1e-5;
const FACTORIZE_TOL: f64 = 1e-12;
const BACKEND_TOL: f64 = 1e-12;
const FWI_OBJECTIVE_RATIO: f64 = 0.5;
const SYMMETRY_TOL: f64 = 1e-12;
const SCALING_WINDOW: (f64, f64) = (6.0, 12.0);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn c1_temporal_convergence() -> Result<Verdict> {
    let cfg = TimeConvergenceConfig::default();
    let r = convergence_time(&cfg)?;
    let pass = cfg.dts.len() >= TIME_MIN_POINTS && within(r.fit.slope, TIME_SLOPE);
    verdict(pass, format!("slope {:.3} over {} dt values, accept {:?}", r.fit.slope, cfg.dts.len(), TIME_SLOPE))
}

fn c2_spatial_convergence() -> Result<Verdict> {
    let reports = convergence_space(&SpaceConvergenceConfig::default())?;
    let mut pass = true;
    let mut parts = vec![];
    for k in SPACE_ORDERS {
        let r = reports.iter().find(|r| r.order == k).expect("order swept");
        let fitted: Vec<f64> = r.points.iter().filter(|p| p.fitted).map(|p| p.error).collect();
        let monotone = fitted.windows(2).all(|w| w[1] < w[0]);
        pass &= (r.fit.slope - k as f64).abs() <= SPACE_SLOPE_TOL && monotone;
        parts.push(format!("k={k}: {:.2}", r.fit.slope));
    }
    if let Some(r) = reports.iter().find(|r| r.order == 10) {
        let excluded = r.points.iter().filter(|p| !p.fitted).count();
        parts.push(format!("k=10: {:.2} ({excluded} saturated points excluded)", r.fit.slope));
    }
    verdict(pass, format!("{}, accept k ± {SPACE_SLOPE_TOL}", parts.join(", ")))
}

fn c3_adjoint_dot_test() -> Result<Verdict> {
    let rows = adjoint_test(&AdjointConfig::default())?;
    let props: Vec<_> = rows.iter().filter(|r| r.kind != "sparse").collect();
    let worst = props.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let covered = [2usize, 3].iter().all(|&d| (2..=12).step_by(2).all(|k| props.iter().any(|r| r.ndim == d && r.order == k)));
    verdict(
        covered && worst <= DOT_TOL,
        format!("{} propagator rows (2-D 64², 3-D 32³, orders 2-12), worst rel. error {worst:.2e} <= {DOT_TOL:e}", props.len()),
    )
}

fn c4_sparse_adjointness() -> Result<Verdict> {
    let grid = Grid::new(&[5, 5], &[1.0, 1.0])?;
    let coords = vec![vec![0.3, 1.7], vec![2.5, 2.5], vec![3.9, 0.1], vec![1.0, 3.25], vec![4.0, 4.0]];
    let (p, q) = sparse_matrices(&grid, coords)?;
    let [np, n] = [p.shape()[0], p.shape()[1]];
    let mut mismatches = 0;
    for i in 0..np {
        for j in 0..n {
            if p.get(&[i, j]).to_bits() != q.get(&[j, i]).to_bits() {
                mismatches += 1;
            }
        }
    }
    verdict(mismatches == 0, format!("5x5 grid, {np} points: {mismatches} entries differ from the transpose"))
}

fn c5_gradient_taylor() -> Result<Verdict> {
    let cfg = GradientConfig::default();
    let r = gradient_test(&cfg)?;
    let (lo, hi) = cfg.hs.iter().fold((f64::MAX, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    let range = lo <= TAYLOR_H_RANGE.0 * 1.0001 && hi >= TAYLOR_H_RANGE.1;
    let pass = range && cfg.order == 8 && within(r.fit0.slope, TAYLOR0) && within(r.fit1.slope, TAYLOR1);
    verdict(pass, format!("eps0 slope {:.3}, eps1 slope {:.3} over h in [{lo:.0e}, {hi:.0e}]", r.fit0.slope, r.fit1.slope))
}

fn c6_brute_force_gradient() -> Result<Verdict> {
    let n = 5;
    let vp = two_layer_velocity(&[n, n], 3, 1500.0, 1800.0);
    let truth = Model::from_velocity(&vp, &[10.0, 10.0], &[0.0, 0.0], 0, 2, DampingProfile::default())?;
    let m0 = truth.with_m(Model::constant(&[n, n], &[10.0, 10.0], &[0.0, 0.0], 1600.0, 0, 2)?.m)?;
    let dt = 0.5 * truth.critical_dt().min(m0.critical_dt());
    let nt = 10;
    let geom = Geometry::ricker(vec![vec![15.0, 10.0]], vec![vec![25.0, 30.0], vec![5.0, 35.0]], 0.0, (nt - 1) as f64 * dt, dt, 150.0)?;
    assert_eq!(geom.nt, nt);
    let s = AcousticSolver::new(&truth, &geom)?;
    let obs = s.forward(&truth, false)?.traces;
    let g = s.objective_and_gradient(&m0, &obs)?.gradient;
    let mut worst = 0.0f64;
    let gmax = g.max_abs();
    for k in 0..m0.m.len() {
        let eps = 1e-4 * m0.m.as_slice()[k];
        let phi = |sign: f64| -> Result<f64> {
            let mut m = m0.m.clone();
            m.as_mut_slice()[k] += sign * eps;
            s.objective(&m0.with_m(m)?, &obs)
        };
        let fd = (phi(1.0)? - phi(-1.0)?) / (2.0 * eps);
        worst = worst.max((fd - g.as_slice()[k]).abs() / gmax);
    }
    verdict(worst <= FD_GRADIENT_TOL, format!("5x5 grid, {nt} steps: max |fd - adjoint| / max|g| = {worst:.2e}"))
}

fn c7_pass_soundness() -> Result<Verdict> {
    let (model, geom) = random_acoustic(&[20, 18], 8, 40, 21);
    let (tr0, u0) = run_forward(&model, &geom, CompileOptions::none());
    let none = CompileOptions::none();
    let mut bitwise = true;
    for opts in [
        CompileOptions { cse: true, ..none.clone() },
        CompileOptions { hoist: true, ..none.clone() },
        CompileOptions { tiles: Some(vec![6, 5]), ..none.clone() },
    ] {
        let (tr, u) = run_forward(&model, &geom, opts);
        bitwise &= bitwise_eq(&u, &u0) && bitwise_eq(&tr, &tr0);
    }
    let (tr, u) = run_forward(&model, &geom, CompileOptions { factorize: true, ..none.clone() });
    let fact = max_rel_diff(&u, &u0).max(max_rel_diff(&tr, &tr0));
    let (m3, g3) = random_acoustic(&[20, 20, 20], 8, 5, 3);
    let flops = |o| -> Result<usize> { Ok(AcousticSolver::with_options(&m3, &g3, o)?.forward_operator(false).meta.flops_per_point) };
    let (before, after) = (flops(none.clone())?, flops(CompileOptions { cse: true, factorize: true, ..none })?);
    verdict(
        bitwise && fact <= FACTORIZE_TOL && after < before,
        format!("cse/hoist/block bitwise: {bitwise}; factorize rel. diff {fact:.1e}; 3-D k=8 flops/pt {before} -> {after}"),
    )
}

fn c8_backend_equivalence() -> Result<Verdict> {
    if !toolchain_available() {
        return verdict(true, "skipped: no C toolchain (capability notice)".into());
    }
    let (model, geom) = random_acoustic(&[48, 40], 8, 102, 8);
    let s = AcousticSolver::new(&model, &geom)?;
    let op = s.forward_operator(false);
    let b = s.forward_bindings(&model, &geom.src_data, false)?;
    let (mut x, mut y) = (b.clone(), b);
    let steps = execute_with(op, &mut x, &ExecOptions::serial())?.steps;
    run_emitted(op, &emit_c99(op)?, &mut y)?;
    let err = max_rel_diff(x.array("u")?, y.array("u")?).max(max_rel_diff(x.array("rec")?, y.array("rec")?));
    verdict(steps >= 100 && err <= BACKEND_TOL, format!("acoustic 2-D, {steps} steps: rel. diff {err:.2e}"))
}

fn c9_desk_fwi() -> Result<Verdict> {
    let cfg = InversionConfig::default();
    let r = inversion_test(&cfg)?;
    let pass = (2..=4).contains(&cfg.nsrc)
        && cfg.iterations == 15
        && r.objective_ratio <= FWI_OBJECTIVE_RATIO
        && r.final_rms < r.initial_rms;
    verdict(
        pass,
        format!(
            "{} sources, {} iterations: objective ratio {:.3}, model rms {:.3e} -> {:.3e}",
            cfg.nsrc, cfg.iterations, r.objective_ratio, r.initial_rms, r.final_rms
        ),
    )
}

fn c10_cfd_properties() -> Result<Verdict> {
    let (grid, init) = Convection::hat(81)?;
    let conv = Convection::new(&grid, 1.0, 0.2 * grid.spacing()[0])?;
    let mut prev = min_max(&init);
    let mut principle = true;
    conv.run_with(&init, 100, &mut |_, u| {
        let (lo, hi) = min_max(u);
        principle &= lo >= prev.0 && hi <= prev.1;
        prev = (lo, hi);
    })?;

    let ps = Poisson::classic()?;
    let r = ps.iterate(&dipole_rhs(&[50, 50], 100.0), &Array::zeros(&[50, 50]), 100, None)?;
    let decreasing = r.residuals.len() == 101 && r.residuals.windows(2).all(|w| w[1] < w[0]);

    let h = 2.0 / 40.0;
    let g = Grid::new(&[41, 41], &[h, h])?;
    let b = Burgers::new(&g, 0.01, 0.0009 * h * h / 0.01)?;
    let hat = box_field(&g, 0.5, 1.0, 1.0, 2.0);
    let (u, v, _) = b.run(&hat, &hat, 120)?;
    let asym = u.as_slice().iter().zip(v.as_slice()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    verdict(
        principle && decreasing && asym <= SYMMETRY_TOL,
        format!("max principle {principle}; Poisson residual strictly decreasing {decreasing}; Burgers |u - v| {asym:.1e}"),
    )
}

fn c11_performance_accounting() -> Result<Verdict> {
    let oi = oi_by_order(&[2, 4, 8, 12, 16], 3)?;
    let monotone = oi.windows(2).all(|w| w[1].1 > w[0].1);
    let cfg = BenchConfig { steps: 20, repeats: 3, parallel: false, ..Default::default() };
    let s = volume_scaling(8, &[400, 400], &[1131, 1131], &cfg)?;
    let ois: Vec<String> = oi.iter().map(|(k, v)| format!("{k}:{v:.2}")).collect();
    verdict(
        monotone && within(s.time_ratio, SCALING_WINDOW),
        format!("OI {}; volume x{:.2} -> time x{:.2}, accept {:?}", ois.join(" "), s.volume_ratio, s.time_ratio, SCALING_WINDOW),
    )
}

type Criterion = (&'static str, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("temporal convergence", c1_temporal_convergence),
        ("spatial convergence", c2_spatial_convergence),
        ("adjoint dot test", c3_adjoint_dot_test),
        ("sparse adjointness", c4_sparse_adjointness),
        ("gradient Taylor test", c5_gradient_taylor),
        ("brute-force gradient", c6_brute_force_gradient),
        ("compiler pass soundness", c7_pass_soundness),
        ("backend equivalence", c8_backend_equivalence),
        ("desk-scale FWI", c9_desk_fwi),
        ("CFD properties", c10_cfd_properties),
        ("performance accounting", c11_performance_accounting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
