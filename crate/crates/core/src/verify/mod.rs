//! Verification experiments: convergence, adjointness, gradients, benchmarks.

pub mod adjoint;
pub mod bench;
pub mod convergence;
pub mod fit;
pub mod gradient;
pub mod inversion;

pub use convergence::{
    convergence_space, convergence_time, ConvergencePoint, ConvergenceReport, Experiment, SpaceConvergenceConfig,
    TimeConvergenceConfig,
};
pub use fit::SlopeFit;
pub use adjoint::{adjoint_test, propagator_dot_test, sparse_dot_test, sparse_matrices, AdjointConfig, DotRow};
pub use gradient::{gradient_test, taylor_sweep, GradientConfig, GradientReport, TaylorPoint};
pub use bench::{bench, bench_one, oi_by_order, volume_scaling, BenchConfig, BenchRow, ScalingReport};
pub use inversion::{inversion_experiment, inversion_test, InversionConfig, InversionReport};
