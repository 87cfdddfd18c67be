//! Lowering of equations to loop nests, optimization passes and accounting.

pub mod flops;
pub mod ir;
pub mod lower;
pub mod operator;
pub mod passes;

pub use flops::{flop_count, oi_estimate, FlopCount};
pub use ir::{Assignment, Direction, Iteration, LoopKind, LoopNestIR, Nest, PointBlock, Section, Target, TimeLoop};
pub use lower::{detect_time_direction, lower};
pub use operator::{CompileOptions, Metadata, Operator};
pub use passes::{block_loops, cse, factorize, hoist, unblock, Names};
