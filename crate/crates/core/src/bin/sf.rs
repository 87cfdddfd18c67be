//! `sf`: verification experiments, example runs and code generation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use stencilforge::backend::{emit_c99, write_sfgd, Array, ExecOptions, Precision};
use stencilforge::cfd::{dipole_rhs, Burgers, Convection, Poisson};
use stencilforge::seismic::{two_layer_velocity, AcousticSolver, DampingProfile, Geometry, Model};
use stencilforge::sparse::{write_coords, write_traces};
use stencilforge::verify::{
    adjoint_test, convergence_space, convergence_time, gradient_test, oi_by_order, volume_scaling, AdjointConfig,
    BenchConfig, GradientConfig, InversionConfig, SpaceConvergenceConfig, TimeConvergenceConfig,
};
use stencilforge::{Grid, Result, SfError};

const TIME_SLOPE: (f64, f64) = (1.8, 2.1);
const SPACE_SLOPE_TOL: f64 = 0.25;
const SPACE_ASSERTED_ORDERS: [usize; 4] = [2, 4, 6, 8];
const DOT_TOL: f64 = 1e-12;
const TAYLOR0: (f64, f64) = (0.85, 1.15);
const TAYLOR1: (f64, f64) = (1.85, 2.15);
const FWI_OBJECTIVE_RATIO: f64 = 0.5;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "sf", version, about = "Finite-difference stencil toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Grid points per axis, comma separated (one value is repeated for every axis)
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Vec<usize>,
    /// Space order(s), comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    order: Vec<usize>,
    /// Time step(s) in seconds, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    dt: Vec<f64>,
    #[arg(long, global = true, default_value_t = 1234)]
    seed: u64,
    /// Write the machine-readable report here
    #[arg(long, global = true, value_name = "OUT")]
    json: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Prec::F64)]
    precision: Prec,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prec {
    F32,
    F64,
}

impl From<Prec> for Precision {
    fn from(p: Prec) -> Precision {
        match p {
            Prec::F32 => Precision::F32,
            Prec::F64 => Precision::F64,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Convergence, adjoint and gradient checks
    Verify {
        #[command(subcommand)]
        what: VerifyCmd,
    },
    /// Run an example and write its fields
    Run {
        #[command(subcommand)]
        what: RunCmd,
        /// Output directory
        #[arg(long, global = true, default_value = "sf-out")]
        out: PathBuf,
    },
    /// Invert a circular anomaly from crosswell data
    Fwi {
        #[arg(long, default_value_t = 15)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        nsrc: usize,
        #[arg(long, default_value = "sf-out")]
        out: PathBuf,
    },
    /// Print the C99 source of the acoustic forward operator
    Emit {
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the acoustic kernel per space order
    Bench {
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Use the parallel space loops
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Trace error against the analytic solution versus dt
    Time,
    /// Trace error against the time-discrete analytic solution versus grid spacing
    Space,
    /// Dot-product tests of the propagators and sparse operators
    Adjoint,
    /// Taylor test of the FWI gradient
    Gradient,
}

#[derive(Subcommand)]
enum RunCmd {
    /// Acoustic forward model on a two-layer velocity
    Acoustic {
        /// Final time in seconds
        #[arg(long, default_value_t = 1.0)]
        tn: f64,
        /// Ricker peak frequency in Hz
        #[arg(long, default_value_t = 10.0)]
        f0: f64,
    },
    /// Linear convection of a hat function
    Convection {
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Coupled 2-D Burgers equations from a hat function
    Burgers {
        #[arg(long, default_value_t = 120)]
        steps: usize,
    },
    /// Jacobi iterations for a Poisson dipole problem
    Poisson {
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        /// Stop once the update norm falls below this value
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// Outcome of one subcommand: report plus whether every asserted tolerance held.
struct Outcome {
    report: Value,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(o) => {
            if let Some(path) = &cli.common.json {
                let text = serde_json::to_string_pretty(&o.report).expect("reports serialize");
                if let Err(e) = fs::write(path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if o.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("FAIL: tolerances not met");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Verify { what } => {
            if matches!(c.precision, Prec::F32) {
                eprintln!("note: verification runs in double precision");
            }
            match what {
                VerifyCmd::Time => verify_time(c),
                VerifyCmd::Space => verify_space(c),
                VerifyCmd::Adjoint => verify_adjoint(c),
                VerifyCmd::Gradient => verify_gradient(c),
            }
        }
        Cmd::Run { what, out } => {
            fs::create_dir_all(out)?;
            match what {
                RunCmd::Acoustic { tn, f0 } => run_acoustic(c, out, *tn, *f0),
                RunCmd::Convection { steps } => run_convection(c, out, *steps),
                RunCmd::Burgers { steps } => run_burgers(c, out, *steps),
                RunCmd::Poisson { iterations, tol } => run_poisson(c, out, *iterations, *tol),
            }
        }
        Cmd::Fwi { iterations, nsrc, out } => run_fwi(c, out, *iterations, *nsrc),
        Cmd::Emit { out } => emit(c, out.as_deref()),
        Cmd::Bench { steps, repeats, parallel } => run_bench(c, *steps, *repeats, *parallel),
    }
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn one_order(c: &Common, default: usize) -> usize {
    c.order.first().copied().unwrap_or(default)
}

/// Shape with `ndim` axes from `--grid`, or `default`.
fn shape(c: &Common, ndim: usize, default: usize) -> Result<Vec<usize>> {
    match c.grid.len() {
        0 => Ok(vec![default; ndim]),
        1 => Ok(vec![c.grid[0]; ndim]),
        n if n == ndim => Ok(c.grid.clone()),
        n => Err(SfError::Config(format!("--grid has {n} values, expected 1 or {ndim}"))),
    }
}

fn verify_time(c: &Common) -> Result<Outcome> {
    let mut cfg = TimeConvergenceConfig::default();
    if let Some(&k) = c.order.first() {
        cfg.order = k;
    }
    if !c.dt.is_empty() {
        cfg.dts = c.dt.clone();
    }
    let r = convergence_time(&cfg)?;
    println!("{:>12} {:>14}", "dt [s]", "rel. error");
    for p in &r.points {
        println!("{:>12.3e} {:>14.4e}", p.step, p.error);
    }
    let pass = within(r.fit.slope, TIME_SLOPE);
    println!("slope {:.3} (accept {:?}) {}", r.fit.slope, TIME_SLOPE, mark(pass));
    Ok(Outcome { report: json!({"config": to_value(&cfg), "result": to_value(&r), "pass": pass}), pass })
}

fn verify_space(c: &Common) -> Result<Outcome> {
    let mut cfg = SpaceConvergenceConfig::default();
    if !c.order.is_empty() {
        cfg.orders = c.order.clone();
    }
    if let Some(&dt) = c.dt.first() {
        cfg.dt = dt;
    }
    let reports = convergence_space(&cfg)?;
    let mut pass = true;
    for r in &reports {
        let asserted = SPACE_ASSERTED_ORDERS.contains(&r.order);
        let ok = !asserted || (r.fit.slope - r.order as f64).abs() <= SPACE_SLOPE_TOL;
        pass &= ok;
        let pts: Vec<String> = r
            .points
            .iter()
            .map(|p| format!("{}:{:.2e}{}", p.step, p.error, if p.fitted { "" } else { "*" }))
            .collect();
        println!(
            "k={:>2} slope {:>6.3} {}  {}",
            r.order,
            r.fit.slope,
            if asserted { mark(ok) } else { "(not asserted)" },
            pts.join(" ")
        );
    }
    if let Some(r) = reports.first() {
        println!("error floor {:.2e}; * = excluded from the fit", r.floor);
    }
    Ok(Outcome { report: json!({"config": to_value(&cfg), "result": to_value(&reports), "pass": pass}), pass })
}

fn verify_adjoint(c: &Common) -> Result<Outcome> {
    let mut cfg = AdjointConfig { seed: c.seed, ..Default::default() };
    if !c.order.is_empty() {
        cfg.orders = c.order.clone();
    }
    if let Some(&n) = c.grid.first() {
        cfg.shape_2d = n;
        cfg.shape_3d = n;
    }
    let rows = adjoint_test(&cfg)?;
    println!("{:>10} {:>4} {:>5} {:>24} {:>24} {:>11}", "kind", "dim", "order", "<Fx,y>", "<x,F'y>", "rel. error");
    let mut pass = true;
    for r in &rows {
        let ok = r.rel_error <= DOT_TOL;
        pass &= ok;
        println!(
            "{:>10} {:>4} {:>5} {:>24.16e} {:>24.16e} {:>11.3e} {}",
            r.kind,
            r.ndim,
            r.order,
            r.forward,
            r.adjoint,
            r.rel_error,
            mark(ok)
        );
    }
    Ok(Outcome { report: json!({"config": to_value(&cfg), "result": to_value(&rows), "pass": pass}), pass })
}

fn verify_gradient(c: &Common) -> Result<Outcome> {
    let mut cfg = GradientConfig::default();
    cfg.order = one_order(c, cfg.order);
    if let Some(&n) = c.grid.first() {
        cfg.n = n;
    }
    let r = gradient_test(&cfg)?;
    println!("{:>10} {:>14} {:>14}", "h", "eps0", "eps1");
    for p in &r.points {
        println!("{:>10.2e} {:>14.4e} {:>14.4e}", p.h, p.eps0, p.eps1);
    }
    let (ok0, ok1) = (within(r.fit0.slope, TAYLOR0), within(r.fit1.slope, TAYLOR1));
    println!("eps0 slope {:.3} {}, eps1 slope {:.3} {}", r.fit0.slope, mark(ok0), r.fit1.slope, mark(ok1));
    let pass = ok0 && ok1;
    Ok(Outcome { report: json!({"config": to_value(&cfg), "result": to_value(&r), "pass": pass}), pass })
}

fn run_acoustic(c: &Common, out: &Path, tn: f64, f0: f64) -> Result<Outcome> {
    let order = one_order(c, 8);
    let shape = shape(c, 2, 101)?;
    let h = [10.0; 2];
    let nz = *shape.last().expect("2-D shape");
    let vp = two_layer_velocity(&shape, nz / 2, 1500.0, 2500.0);
    let model = Model::from_velocity(&vp, &h, &[0.0, 0.0], 40, order, DampingProfile::default())?;
    let dt = c.dt.first().copied().unwrap_or(0.9 * model.critical_dt());
    let ext: Vec<f64> = shape.iter().map(|&n| (n - 1) as f64 * 10.0).collect();
    let src = vec![vec![ext[0] / 2.0, 20.0]];
    let rec: Vec<Vec<f64>> = (0..shape[0]).map(|i| vec![i as f64 * 10.0, 30.0]).collect();
    let geom = Geometry::ricker(src, rec.clone(), 0.0, tn, dt, f0)?;
    let mut solver = AcousticSolver::new(&model, &geom)?;
    solver.exec = ExecOptions { precision: c.precision.into(), ..Default::default() };
    let run = solver.forward(&model, false)?;
    let last = geom.nt - 1;
    let u = run.wavefield(last)?;
    write_sfgd(&out.join("vp.sfgd"), &model.vp())?;
    write_sfgd(&out.join("u_final.sfgd"), &u)?;
    write_traces(&out.join("traces.csv"), geom.t0, dt, run.traces.as_slice(), rec.len())?;
    write_coords(&out.join("receivers.csv"), &rec)?;
    let finite = run.traces.as_slice().iter().all(|v| v.is_finite());
    println!(
        "acoustic {}x{} order {order}: nt {} dt {:.3e} s, {:.3} s, {:.2} GFLOP/s; wrote {}",
        shape[0],
        shape[1],
        geom.nt,
        dt,
        run.report.wall_time,
        run.report.gflops,
        out.display()
    );
    let report = json!({
        "case": "acoustic", "shape": shape, "order": order, "dt": dt, "nt": geom.nt,
        "max_abs_trace": run.traces.max_abs(), "report": to_value(&run.report), "pass": finite,
    });
    Ok(Outcome { report, pass: finite })
}

fn write_pair(out: &Path, name: &str, init: &Array, fin: &Array) -> Result<()> {
    write_sfgd(&out.join(format!("{name}_initial.sfgd")), init)?;
    write_sfgd(&out.join(format!("{name}_final.sfgd")), fin)
}

fn write_summary(out: &Path, v: &Value) -> Result<()> {
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(v).expect("reports serialize"))?;
    Ok(())
}

fn run_convection(c: &Common, out: &Path, steps: usize) -> Result<Outcome> {
    let (grid, init) = Convection::hat(shape(c, 1, 81)?[0])?;
    let h = grid.spacing()[0];
    let mut conv = Convection::new(&grid, 1.0, c.dt.first().copied().unwrap_or(0.2 * h))?;
    conv.exec.precision = c.precision.into();
    let mut prev = stencilforge::cfd::min_max(&init);
    let mut principle = true;
    let fin = conv.run_with(&init, steps, &mut |_, u| {
        let (lo, hi) = stencilforge::cfd::min_max(u);
        principle &= lo >= prev.0 && hi <= prev.1;
        prev = (lo, hi);
    })?;
    write_pair(out, "u", &init, &fin)?;
    let (min, max) = stencilforge::cfd::min_max(&fin);
    println!("convection {steps} steps: min {min:.6} max {max:.6}; maximum principle {}", mark(principle));
    let report = json!({"case": "convection", "steps": steps, "min": min, "max": max, "maximum_principle": principle, "pass": principle});
    write_summary(out, &report)?;
    Ok(Outcome { report, pass: principle })
}

fn run_burgers(c: &Common, out: &Path, steps: usize) -> Result<Outcome> {
    let n = shape(c, 1, 41)?[0];
    let h = 2.0 / (n - 1) as f64;
    let grid = Grid::new(&[n, n], &[h, h])?;
    let nu = 0.01;
    let mut b = Burgers::new(&grid, nu, c.dt.first().copied().unwrap_or(0.0009 * h * h / nu))?;
    b.exec.precision = c.precision.into();
    let init = stencilforge::cfd::box_field(&grid, 0.5, 1.0, 1.0, 2.0);
    let (u, v, s) = b.run(&init, &init, steps)?;
    write_pair(out, "u", &init, &u)?;
    write_pair(out, "v", &init, &v)?;
    let asym = u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = asym <= SYMMETRY_TOL;
    println!("burgers {steps} steps: min {:.6} max {:.6}; max |u - v| {asym:.2e} {}", s.min, s.max, mark(pass));
    let report = json!({"case": "burgers", "steps": steps, "min": s.min, "max": s.max, "max_uv_difference": asym, "pass": pass});
    write_summary(out, &report)?;
    Ok(Outcome { report, pass })
}

fn run_poisson(c: &Common, out: &Path, iterations: usize, tol: Option<f64>) -> Result<Outcome> {
    let n = shape(c, 2, 50)?;
    let grid = Grid::new(&n, &[2.0 / (n[0] - 1) as f64, 1.0 / (n[1] - 1) as f64])?;
    let mut ps = Poisson::new(&grid)?;
    ps.exec.precision = c.precision.into();
    let b = dipole_rhs(&n, 100.0);
    let p0 = Array::zeros(&n);
    let r = ps.iterate(&b, &p0, iterations, tol)?;
    write_pair(out, "p", &p0, &r.p)?;
    write_sfgd(&out.join("b.sfgd"), &b)?;
    let decreasing = r.residuals.windows(2).all(|w| w[1] < w[0]);
    println!(
        "poisson {} iterations: min {:.4e} max {:.4e}; residual {:.4e} -> {:.4e} {}",
        r.iterations,
        r.summary.min,
        r.summary.max,
        r.residuals[0],
        r.residuals.last().expect("at least one residual"),
        if decreasing { "strictly decreasing" } else { "NOT decreasing" }
    );
    let mut report = to_value(&r.summary);
    report["pass"] = json!(decreasing);
    write_summary(out, &report)?;
    Ok(Outcome { report, pass: decreasing })
}

fn run_fwi(c: &Common, out: &Path, iterations: usize, nsrc: usize) -> Result<Outcome> {
    let mut cfg = InversionConfig { iterations, nsrc, ..Default::default() };
    cfg.order = one_order(c, cfg.order);
    if let Some(&n) = c.grid.first() {
        cfg.n = n;
    }
    let r = stencilforge::verify::inversion_test(&cfg)?;
    fs::create_dir_all(out)?;
    println!("{:>4} {:>14} {:>12} {:>12}", "iter", "objective", "step", "model rms");
    for h in &r.history {
        println!("{:>4} {:>14.6e} {:>12.4e} {:>12.4e}", h.iteration, h.objective, h.step, h.model_error.unwrap_or(f64::NAN));
    }
    let pass = r.objective_ratio <= FWI_OBJECTIVE_RATIO && r.final_rms < r.initial_rms;
    println!(
        "objective ratio {:.3} (accept <= {FWI_OBJECTIVE_RATIO}), rms {:.3e} -> {:.3e} {}",
        r.objective_ratio,
        r.initial_rms,
        r.final_rms,
        mark(pass)
    );
    fs::write(out.join("fwi_history.json"), serde_json::to_string_pretty(&r.history).expect("reports serialize"))?;
    Ok(Outcome { report: json!({"result": to_value(&r), "pass": pass}), pass })
}

fn emit(c: &Common, out: Option<&Path>) -> Result<Outcome> {
    let order = one_order(c, 8);
    let shape = shape(c, 2, 101)?;
    let h = vec![10.0; shape.len()];
    let model = Model::constant(&shape, &h, &vec![0.0; shape.len()], 1500.0, 10, order)?;
    let dt = c.dt.first().copied().unwrap_or(0.9 * model.critical_dt());
    let centre: Vec<f64> = shape.iter().map(|&n| (n / 2) as f64 * 10.0).collect();
    let geom = Geometry::ricker(vec![centre.clone()], vec![centre], 0.0, 10.0 * dt, dt, 10.0)?;
    let solver = AcousticSolver::new(&model, &geom)?;
    let op = solver.forward_operator(false);
    let src = emit_c99(op)?;
    match out {
        Some(p) => fs::write(p, &src)?,
        None => print!("{src}"),
    }
    Ok(Outcome { report: op.metadata_json(), pass: true })
}

fn run_bench(c: &Common, steps: usize, repeats: usize, parallel: bool) -> Result<Outcome> {
    let mut cfg = BenchConfig { steps, repeats, parallel, precision: c.precision.into(), ..Default::default() };
    if !c.order.is_empty() {
        cfg.orders = c.order.clone();
    }
    if !c.grid.is_empty() {
        cfg.shapes = c.grid.iter().map(|&n| vec![n, n]).collect();
    }
    let rows = stencilforge::verify::bench(&cfg)?;
    println!(
        "{:>5} {:>12} {:>7} {:>10} {:>10} {:>11} {:>9}",
        "order", "shape", "steps", "flops/pt", "OI", "time [s]", "GFLOP/s"
    );
    for r in &rows {
        let s: Vec<String> = r.shape.iter().map(|n| n.to_string()).collect();
        println!(
            "{:>5} {:>12} {:>7} {:>10} {:>10.3} {:>11.4e} {:>9.3}",
            r.order,
            s.join("x"),
            r.steps,
            r.flops_per_point,
            r.oi,
            r.wall_time,
            r.gflops
        );
    }
    let oi = oi_by_order(&cfg.orders, 2)?;
    let monotone = oi.windows(2).all(|w| w[1].1 > w[0].1);
    println!("OI monotone in order: {}", mark(monotone));
    let mut report = json!({"config": to_value(&cfg), "rows": to_value(&rows), "oi_monotone": monotone});
    if cfg.shapes.len() >= 2 {
        let order = cfg.orders[0];
        let s = volume_scaling(order, &cfg.shapes[0], &cfg.shapes[cfg.shapes.len() - 1], &cfg)?;
        println!("volume x{:.2} -> time x{:.2} (order {order})", s.volume_ratio, s.time_ratio);
        report["scaling"] = to_value(&s);
    }
    report["pass"] = json!(monotone);
    Ok(Outcome { report, pass: monotone })
}
