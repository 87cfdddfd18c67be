#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stencilforge::backend::{Array, ExecOptions};
use stencilforge::compiler::CompileOptions;
use stencilforge::seismic::{AcousticSolver, DampingProfile, Geometry, Model};

pub fn max_rel_diff(a: &Array, b: &Array) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let scale = a.max_abs().max(b.max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn bitwise_eq(a: &Array, b: &Array) -> bool {
    a.shape() == b.shape() && a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Random-velocity model with an off-grid source and a line of receivers.
pub fn random_acoustic(shape: &[usize], order: usize, nt: usize, seed: u64) -> (Model, Geometry) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = shape.len();
    let n: usize = shape.iter().product();
    let vp = Array::from_vec(shape, (0..n).map(|_| rng.gen_range(1500.0..2500.0)).collect()).unwrap();
    let h = vec![10.0; nd];
    let model = Model::from_velocity(&vp, &h, &vec![0.0; nd], 4, order, DampingProfile::default()).unwrap();
    let dt = 0.8 * model.critical_dt();
    let ext: Vec<f64> = shape.iter().map(|&n| (n - 1) as f64 * 10.0).collect();
    let src: Vec<f64> = ext.iter().map(|e| 0.37 * e + 1.3).collect();
    let rec = (1..shape[0] - 1)
        .map(|i| {
            let mut c = vec![0.5 * ext[1]; nd];
            c[0] = i as f64 * 10.0 + 2.5;
            c
        })
        .collect();
    let geom = Geometry::ricker(vec![src], rec, 0.0, (nt - 1) as f64 * dt, dt, 15.0).unwrap();
    (model, geom)
}

/// Forward traces and final wavefield under `opts`, serial execution.
pub fn run_forward(model: &Model, geom: &Geometry, opts: CompileOptions) -> (Array, Array) {
    let mut s = AcousticSolver::with_options(model, geom, opts).unwrap();
    s.exec = ExecOptions::serial();
    let run = s.forward(model, false).unwrap();
    let u = run.wavefield(geom.nt - 1).unwrap();
    (run.traces, u)
}
