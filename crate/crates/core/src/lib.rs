//! Data-driven chance-constrained programs over Wasserstein ambiguity sets.
//!
//! The crate models joint chance constraints whose distribution is only known
//! through samples, certifies fixed decisions with an exact worst-case
//! probability oracle, compiles CVaR-based and exact binary reformulations into
//! a small cone-program IR, and solves them with bundled conic solvers plus a
//! best-bound branch-and-bound.

pub mod conic_ir;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod reformulate;
pub mod scalar;
pub mod solve;

pub use scalar::Scalar;

pub type Problem = model::DrccpProblem<f64>;
pub type Program = conic_ir::ConeProgram<f64>;
pub type Estimate = oracle::ViolationEstimate<f64>;
