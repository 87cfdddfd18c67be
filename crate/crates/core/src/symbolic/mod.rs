//! Symbolic layer: expressions, fields, derivatives and equations.

pub mod calculus;
pub mod equation;
pub mod expr;
pub mod function;
pub mod solve;

pub use calculus::{derivative, expand_derivatives, laplace, shift, stencil_offsets};
pub use equation::{Bound, Equation, Region};
pub use expr::{make_add, make_mul, make_pow, Access, Derivative, Expr, Index, Node, Num, Side};
pub use function::{Constant, FieldDecl, FieldKind, FieldRef};
pub use solve::{collect_linear, expand, simplify_fold, solve_linear, substitute};
