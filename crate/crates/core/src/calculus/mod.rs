//! Expressions over `R^d` and their codifferential calculus.
//!
//! [`evaluate`] walks the DAG once, propagating values and codifferentials
//! through the max/min, sum, product, reciprocal, composition and affine-norm
//! rules. Nodes whose inputs are all smooth keep a plain gradient and are
//! converted to `[{(0, g)}, {0}]` only when they meet a nonsmooth operation.

mod eval;
mod expr;
mod smooth;

pub use eval::{
    approximation_error, approximation_error_from, directional_derivative, evaluate,
    ApproximationProbe, EvalOutput,
};
pub use expr::{ExprBuilder, ExprTree, Expression, Node, NodeId};
pub use smooth::{SmoothFn, SmoothMultiFn};
