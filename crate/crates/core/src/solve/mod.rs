//! Solver adapters for continuous cone programs and a best-bound
//! branch-and-bound for programs with binary variables.

mod bnb;
mod clarabel_adapter;
mod dense_ipm;
pub mod ipm;

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

use crate::conic_ir::{Cone, ConeProgram, Solution, SolveStatus, FEAS_TOL};
use crate::model::Sense;
use crate::scalar::Scalar;

pub use bnb::{branch_and_bound, branch_and_bound_with_incumbent, BnbConfig};
pub use clarabel_adapter::ClarabelAdapter;
pub use dense_ipm::DenseIpmAdapter;

/// Environment variable naming the default adapter.
pub const SOLVER_ENV: &str = "DRCCP_SOLVER";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("adapter {adapter} does not support the {cone} cone used by block {block}")]
    UnsupportedCone { adapter: String, cone: String, block: usize },
    #[error("program has binary variables; use branch_and_bound")]
    IntegralityPresent,
    #[error("unknown solver adapter {0:?} (expected clarabel, dense-ipm or auto)")]
    UnknownAdapter(String),
    #[error("invalid branch-and-bound configuration: {0}")]
    Config(String),
}

/// A continuous conic solver.
pub trait SolverAdapter: Send + Sync {
    fn name(&self) -> &'static str;
    fn capabilities(&self) -> BTreeSet<Cone>;
    /// Solves the continuous program; integrality marks are ignored.
    fn solve(&self, prog: &ConeProgram<f64>) -> Solution<f64>;
}

/// Picks the dense IPM for programs with PSD blocks and Clarabel otherwise,
/// retrying with the dense IPM when Clarabel reports a numerical failure on a
/// small program.
#[derive(Default)]
pub struct AutoAdapter {
    clarabel: ClarabelAdapter,
    ipm: DenseIpmAdapter,
}

impl SolverAdapter for AutoAdapter {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn capabilities(&self) -> BTreeSet<Cone> {
        self.ipm.capabilities()
    }

    fn solve(&self, prog: &ConeProgram<f64>) -> Solution<f64> {
        if prog.cones().contains(&Cone::Psd) {
            return self.ipm.solve(prog);
        }
        let sol = self.clarabel.solve(prog);
        if sol.status == SolveStatus::NumericalFailure && prog.n_vars + prog.n_rows() <= 1500 {
            return self.ipm.solve(prog);
        }
        sol
    }
}

/// Resolves an adapter by name: `clarabel`, `dense-ipm` or `auto`.
pub fn adapter_by_name(name: &str) -> Result<Box<dyn SolverAdapter>, SolveError> {
    match name {
        "clarabel" => Ok(Box::new(ClarabelAdapter::default())),
        "dense-ipm" | "ipm" => Ok(Box::new(DenseIpmAdapter::default())),
        "auto" => Ok(Box::new(AutoAdapter::default())),
        other => Err(SolveError::UnknownAdapter(other.to_string())),
    }
}

/// Adapter named by `DRCCP_SOLVER`, falling back to `auto`.
pub fn default_adapter_name() -> String {
    std::env::var(SOLVER_ENV).ok().filter(|s| !s.is_empty()).unwrap_or_else(|| "auto".to_string())
}

fn check_capabilities<T: Scalar>(prog: &ConeProgram<T>, adapter: &dyn SolverAdapter) -> Result<(), SolveError> {
    let caps = adapter.capabilities();
    for (k, b) in prog.blocks.iter().enumerate() {
        if !caps.contains(&b.cone) {
            return Err(SolveError::UnsupportedCone {
                adapter: adapter.name().to_string(),
                cone: b.cone.tag().to_string(),
                block: k,
            });
        }
    }
    Ok(())
}

fn cast_solution<T: Scalar>(sol: Solution<f64>) -> Solution<T> {
    Solution {
        status: sol.status,
        primal: sol.primal.iter().map(|&v| T::of(v)).collect(),
        objective_value: T::of(sol.objective_value),
        duals: sol.duals.map(|d| d.iter().map(|b| b.iter().map(|&v| T::of(v)).collect()).collect()),
        stats: sol.stats,
    }
}

/// Solves a program without binary variables.
pub fn solve_continuous<T: Scalar>(prog: &ConeProgram<T>, adapter: &dyn SolverAdapter) -> Result<Solution<T>, SolveError> {
    if !prog.integrality.is_empty() {
        return Err(SolveError::IntegralityPresent);
    }
    check_capabilities(prog, adapter)?;
    let start = Instant::now();
    let mut sol = adapter.solve(&prog.cast());
    sol.stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(cast_solution(sol))
}

/// Continuous solve or branch-and-bound, depending on integrality marks.
pub fn solve_program<T: Scalar>(
    prog: &ConeProgram<T>,
    adapter: &dyn SolverAdapter,
    cfg: &BnbConfig,
) -> Result<Solution<T>, SolveError> {
    if prog.integrality.is_empty() {
        solve_continuous(prog, adapter)
    } else {
        branch_and_bound(prog, adapter, cfg)
    }
}

/// Program in solver form: `min cᵀx + c0` s.t. `Ax + s = b`, `s ∈ K`.
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    /// `(row, col, value)` of `A`.
    pub triplets: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `(cone, first row, length)` per block.
    pub cones: Vec<(Cone, usize, usize)>,
}

impl StandardForm {
    pub fn new(prog: &ConeProgram<f64>) -> Self {
        let sign = match prog.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; prog.n_vars];
        for &(v, coef) in &prog.objective.terms {
            c[v] = sign * coef;
        }
        let mut triplets = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::with_capacity(prog.blocks.len());
        for block in &prog.blocks {
            let start = b.len();
            for row in &block.rows {
                let r = b.len();
                for &(v, coef) in &row.terms {
                    triplets.push((r, v, -coef));
                }
                b.push(row.constant);
            }
            cones.push((block.cone, start, block.rows.len()));
        }
        Self { n: prog.n_vars, m: b.len(), triplets, b, c, cones }
    }
}

/// Wraps a raw primal point into a solution in the program's own sense.
pub(crate) fn finish(
    prog: &ConeProgram<f64>,
    status: SolveStatus,
    x: Vec<f64>,
    z: Option<Vec<f64>>,
    form: &StandardForm,
    iterations: usize,
) -> Solution<f64> {
    let mut status = status;
    if status == SolveStatus::Optimal {
        let worst = prog
            .check_solution(&x)
            .map(|r| r.into_iter().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NEG_INFINITY);
        if !(worst >= -FEAS_TOL) || x.iter().any(|v| !v.is_finite()) {
            status = SolveStatus::NumericalFailure;
        }
    }
    let duals = z.map(|z| form.cones.iter().map(|&(_, s, d)| z[s..s + d].to_vec()).collect());
    let objective_value = if x.iter().all(|v| v.is_finite()) { prog.objective_value(&x) } else { f64::NAN };
    Solution {
        status,
        primal: x,
        objective_value,
        duals,
        stats: crate::conic_ir::SolveStats { iterations, ..Default::default() },
    }
}
