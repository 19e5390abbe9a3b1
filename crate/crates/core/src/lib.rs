//! Codifferential calculus in `R^d` and the method of codifferential descent.
//!
//! * [`codiff`]: generator sets, normalization, Minkowski sums, truncation.
//! * [`calculus`]: expression DAGs evaluated to `(f(x), Df(x))`.
//! * [`subsolvers`]: min-norm point and the regularized min-max subproblem.
//! * [`solvers`]: MCD, its quadratically regularized variant, stationarity.
//! * [`problems`]: benchmark constructors and Haar-point certificates.
//! * [`harness`]: run configuration, rate fitting and acceptance suites.

pub mod calculus;
pub mod codiff;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod serde_ext;
pub mod solvers;
pub mod subsolvers;

pub use calculus::{evaluate, EvalOutput, ExprBuilder, Expression};
pub use codiff::{Codifferential, GeneratorSet, OffsetPair, TruncationParams};
pub use error::{Error, Result};
pub use solvers::{mcd_solve, qrmcd_solve, McdConfig, Trace};
pub use problems::{problem_by_name, Problem};
pub use subsolvers::FeasibleSet;
