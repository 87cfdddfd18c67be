//! Reference interpreter, array I/O and C99 emission for compiled operators.

pub mod array;
pub mod autotune;
pub mod bindings;
pub mod code;
pub mod emit;
pub mod exec;
pub mod gridio;

pub use array::Array;
pub use autotune::autotune;
pub use bindings::Bindings;
pub use emit::{emit_c99, run_emitted, toolchain_available};
pub use exec::{execute, execute_with, ExecOptions, ExecReport, Precision};
pub use gridio::{read_sfgd, write_sfgd};
