//! Solver-agnostic cone-program IR.
//!
//! A program minimizes or maximizes a sparse affine objective over `n_vars`
//! variables subject to blocks `e(x) ∈ K`, where each row of `e` is an affine
//! expression and `K` is one of:
//!
//! * `Zero`: `e = 0`;
//! * `Nonnegative`: `e ≥ 0` componentwise;
//! * `SecondOrder`: `e₀ ≥ ‖(e₁, …, e_{d−1})‖₂`;
//! * `Psd`: the symmetric matrix packed in `e` is positive semidefinite.
//!
//! PSD blocks of order `k` have `k(k+1)/2` rows holding the lower triangle
//! row by row, `(0,0), (1,0), (1,1), (2,0), …`, with off-diagonal entries
//! multiplied by `√2`. With this packing the Euclidean inner product of two
//! packed vectors equals the trace inner product of the matrices.

mod expr;
mod program;
mod text;

pub use expr::LinExpr;
pub use program::{
    psd_index, psd_order, psd_pack, psd_unpack, Block, BlockId, Cone, ConeProgram, IrError, FEAS_TOL,
};
pub use text::TextError;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    NodeLimit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub wall_ms: f64,
    /// Branch-and-bound nodes processed (0 for continuous solves).
    pub nodes: usize,
    /// `(node, objective)` each time the incumbent improved.
    pub incumbent_trace: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: crate::Scalar")]
pub struct Solution<T> {
    pub status: SolveStatus,
    pub primal: Vec<T>,
    /// In the program's own sense, constant included.
    pub objective_value: T,
    pub duals: Option<Vec<Vec<T>>>,
    pub stats: SolveStats,
}

impl<T: crate::Scalar> Solution<T> {
    pub fn failed(status: SolveStatus, n_vars: usize) -> Self {
        Self {
            status,
            primal: vec![T::nan(); n_vars],
            objective_value: T::nan(),
            duals: None,
            stats: SolveStats::default(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
