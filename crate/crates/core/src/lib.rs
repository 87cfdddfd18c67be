//! Symbolic finite-difference stencils compiled to executable loop nests,
//! with acoustic modelling, adjoint-state inversion and CFD examples.

pub mod backend;
pub mod cfd;
pub mod compiler;
pub mod error;
pub mod fdcoeff;
pub mod grid;
pub mod seismic;
pub mod sparse;
pub mod symbolic;
pub mod verify;

pub use error::{Result, SfError};
pub use grid::{Dimension, Grid};
