//! Acoustic modelling, adjoint-state gradients and inversion.

pub mod analytic;
pub mod fwi;
pub mod model;
pub mod operators;
pub mod source;

pub use analytic::{analytic_2d, analytic_2d_with_period, bessel_j0, bessel_y0, TimeReference};
pub use fwi::{fwi, model_shots, FwiOptions, FwiRecord, FwiResult, Shot};
pub use model::{build_damping, circle_velocity, critical_dt, two_layer_velocity, DampingProfile, Model};
pub use operators::{check_cfl, AcousticSolver, GradientResult, Propagation};
pub use source::{ricker, ricker_delayed, sample_count, Geometry};
