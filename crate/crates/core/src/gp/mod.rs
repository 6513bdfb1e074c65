//! Generalized geometric programming in log variables.

mod expr;
mod problem;
mod sexpr;
mod solver;

pub use expr::{ExprArena, ExprClass, ExprId, LocalEval, Node};
pub use problem::{Constraint, ConvexForm, GpProblem, Program, Sense, Term};
pub use sexpr::to_sexpr;
pub use solver::{solve, GpOptions, GpSolution, GpStatus, ARMIJO, SHRINK, T_GROWTH, T_START};
