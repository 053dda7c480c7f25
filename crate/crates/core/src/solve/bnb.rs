//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes are taken from the open set in batches of `batch_size` (lowest bound
//! first, node id breaking ties); the batch relaxations may be solved on
//! several workers, but results are merged in node order, so the search is
//! identical for any worker count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rayon::prelude::*;

use super::{cast_solution, check_capabilities, SolveError, SolverAdapter};
use crate::conic_ir::{Cone, ConeProgram, LinExpr, Solution, SolveStats, SolveStatus, FEAS_TOL};
use crate::model::Sense;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct BnbConfig {
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub max_nodes: usize,
    pub integrality_tol: f64,
    /// Threads used to solve the relaxations of one batch.
    pub workers: usize,
    /// Nodes expanded per round; fixed independently of `workers`.
    pub batch_size: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self { rel_gap: 1e-6, abs_gap: 1e-9, max_nodes: 100_000, integrality_tol: 1e-6, workers: 1, batch_size: 8 }
    }
}

impl BnbConfig {
    fn validate(&self) -> Result<(), SolveError> {
        let positive = [self.rel_gap, self.abs_gap, self.integrality_tol].iter().all(|&v| v > 0.0);
        if !positive || self.max_nodes == 0 || self.workers == 0 || self.batch_size == 0 {
            return Err(SolveError::Config("tolerances, node limit, workers and batch size must be positive".into()));
        }
        Ok(())
    }
}

struct Node {
    id: usize,
    /// Lower bound in minimization form.
    bound: f64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the "greatest" node is the one with the smallest bound, then smallest id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    base: ConeProgram<f64>,
    binaries: Vec<usize>,
    sign: f64,
    adapter: &'a dyn SolverAdapter,
}

/// Node program with the fixed variables substituted out and the rest renumbered.
struct Reduced {
    prog: ConeProgram<f64>,
    /// Reduced index per original variable, or its fixed value.
    map: Vec<Result<usize, f64>>,
}

/// `None` when a row left constant by the fixings is violated.
fn substitute(base: &ConeProgram<f64>, fixings: &[(usize, f64)]) -> Option<Reduced> {
    let mut map: Vec<Result<usize, f64>> = vec![Ok(0); base.n_vars];
    for &(v, val) in fixings {
        map[v] = Err(val);
    }
    let mut next = 0;
    for m in map.iter_mut() {
        if let Ok(k) = m {
            *k = next;
            next += 1;
        }
    }
    let fold = |e: &LinExpr<f64>| {
        let mut constant = e.constant;
        let mut terms = Vec::with_capacity(e.terms.len());
        for &(v, c) in &e.terms {
            match map[v] {
                Ok(k) => terms.push((k, c)),
                Err(val) => constant += c * val,
            }
        }
        LinExpr::from_terms(terms, constant)
    };
    let mut prog = ConeProgram::new();
    prog.n_vars = next;
    prog.sense = base.sense;
    prog.objective = fold(&base.objective);
    for block in &base.blocks {
        let rows: Vec<LinExpr<f64>> = block.rows.iter().map(fold).collect();
        let rows = match block.cone {
            // constant rows would pin a slack to the cone boundary
            Cone::Zero | Cone::Nonnegative => {
                let mut kept = Vec::with_capacity(rows.len());
                for r in rows {
                    if !r.terms.is_empty() {
                        kept.push(r);
                    } else if block.cone == Cone::Zero && r.constant.abs() > FEAS_TOL {
                        return None;
                    } else if r.constant < -FEAS_TOL {
                        return None;
                    }
                }
                kept
            }
            Cone::SecondOrder | Cone::Psd => rows,
        };
        if !rows.is_empty() {
            prog.add_block(rows, block.cone).expect("renumbered rows stay in range");
        }
    }
    Some(Reduced { prog, map })
}

impl Search<'_> {
    fn solve(&self, fixings: &[(usize, f64)]) -> Solution<f64> {
        if fixings.is_empty() {
            return self.adapter.solve(&self.base);
        }
        let Some(reduced) = substitute(&self.base, fixings) else {
            return Solution::failed(SolveStatus::Infeasible, self.base.n_vars);
        };
        let sol = self.adapter.solve(&reduced.prog);
        let primal: Vec<f64> = reduced
            .map
            .iter()
            .map(|m| match *m {
                Ok(k) => sol.primal.get(k).copied().unwrap_or(f64::NAN),
                Err(val) => val,
            })
            .collect();
        let objective_value = if sol.is_optimal() { self.base.objective_value(&primal) } else { f64::NAN };
        Solution { status: sol.status, primal, objective_value, duals: None, stats: sol.stats }
    }

    fn min_form(&self, sol: &Solution<f64>) -> f64 {
        self.sign * sol.objective_value
    }
}

/// Branch-and-bound with no starting incumbent.
pub fn branch_and_bound<T: Scalar>(
    prog: &ConeProgram<T>,
    adapter: &dyn SolverAdapter,
    cfg: &BnbConfig,
) -> Result<Solution<T>, SolveError> {
    branch_and_bound_with_incumbent(prog, adapter, cfg, None)
}

/// Branch-and-bound seeded with an optional feasible point of `prog`.
pub fn branch_and_bound_with_incumbent<T: Scalar>(
    prog: &ConeProgram<T>,
    adapter: &dyn SolverAdapter,
    cfg: &BnbConfig,
    start: Option<&[f64]>,
) -> Result<Solution<T>, SolveError> {
    cfg.validate()?;
    check_capabilities(prog, adapter)?;
    let clock = Instant::now();
    let full: ConeProgram<f64> = prog.cast();
    let binaries: Vec<usize> = full.integrality.iter().copied().collect();
    let mut base = full.relaxation();
    if !binaries.is_empty() {
        let mut rows = Vec::with_capacity(2 * binaries.len());
        for &v in &binaries {
            rows.push(LinExpr::var(v));
            rows.push(LinExpr::from_terms(vec![(v, -1.0)], 1.0));
        }
        base.add_block(rows, Cone::Nonnegative).expect("binary bounds");
    }
    let sign = match full.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let search = Search { base, binaries, sign, adapter };

    let mut stats = SolveStats::default();
    let mut incumbent: Option<Solution<f64>> = None;
    if let Some(x) = start {
        if x.len() == full.n_vars && full.is_feasible(x, FEAS_TOL, cfg.integrality_tol) {
            let fix: Vec<(usize, f64)> = search.binaries.iter().map(|&v| (v, x[v].round())).collect();
            let sol = search.solve(&fix);
            if sol.is_optimal() {
                stats.incumbent_trace.push((0, sol.objective_value));
                incumbent = Some(sol);
            }
        }
    }

    let pool = if cfg.workers > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().ok()
    } else {
        None
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node { id: 0, bound: f64::NEG_INFINITY, fixings: Vec::new() });
    let mut next_id = 1;
    let mut failures = 0usize;
    let mut unbounded = false;
    let mut hit_limit = false;

    let closed = |inc: &Option<Solution<f64>>, bound: f64| -> bool {
        match inc {
            Some(s) => {
                let v = sign * s.objective_value;
                v - bound <= cfg.abs_gap.max(cfg.rel_gap * v.abs().max(1.0))
            }
            None => false,
        }
    };

    while let Some(top) = heap.peek() {
        if closed(&incumbent, top.bound) {
            break;
        }
        if stats.nodes >= cfg.max_nodes {
            hit_limit = true;
            break;
        }
        let take = cfg.batch_size.min(cfg.max_nodes - stats.nodes);
        let mut batch = Vec::with_capacity(take);
        while batch.len() < take {
            let Some(node) = heap.pop() else { break };
            if closed(&incumbent, node.bound) {
                continue;
            }
            batch.push(node);
        }
        if batch.is_empty() {
            continue;
        }
        let results: Vec<Solution<f64>> = match &pool {
            Some(pool) => pool.install(|| batch.par_iter().map(|n| search.solve(&n.fixings)).collect()),
            None => batch.iter().map(|n| search.solve(&n.fixings)).collect(),
        };
        for (node, sol) in batch.into_iter().zip(results) {
            stats.nodes += 1;
            stats.iterations += sol.stats.iterations;
            match sol.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => continue,
                SolveStatus::Unbounded => {
                    unbounded = true;
                    continue;
                }
                _ => {
                    // No bound from this relaxation: split on the first free
                    // binary under the parent's bound, and give up only at leaves.
                    let free = search.binaries.iter().copied().find(|v| node.fixings.iter().all(|&(f, _)| f != *v));
                    match free {
                        Some(v) => {
                            for val in [0.0, 1.0] {
                                let mut fixings = node.fixings.clone();
                                fixings.push((v, val));
                                fixings.sort_by_key(|&(var, _)| var);
                                heap.push(Node { id: next_id, bound: node.bound, fixings });
                                next_id += 1;
                            }
                        }
                        None => failures += 1,
                    }
                    continue;
                }
            }
            let value = search.min_form(&sol);
            if closed(&incumbent, value) {
                continue;
            }
            // Most fractional binary, lowest index on ties.
            let mut branch_var = None;
            let mut best_frac = cfg.integrality_tol;
            for &v in &search.binaries {
                let x = sol.primal[v];
                let frac = (x - x.floor()).min(x.ceil() - x);
                if frac > best_frac {
                    best_frac = frac;
                    branch_var = Some(v);
                }
            }
            match branch_var {
                None => {
                    let fix: Vec<(usize, f64)> =
                        search.binaries.iter().map(|&v| (v, sol.primal[v].round().clamp(0.0, 1.0))).collect();
                    let polished = search.solve(&fix);
                    stats.iterations += polished.stats.iterations;
                    let candidate = if polished.is_optimal() { polished } else { sol };
                    let better = match &incumbent {
                        Some(inc) => sign * candidate.objective_value < sign * inc.objective_value,
                        None => true,
                    };
                    if better && candidate.is_optimal() {
                        stats.incumbent_trace.push((stats.nodes, candidate.objective_value));
                        incumbent = Some(candidate);
                    }
                }
                Some(v) => {
                    for val in [0.0, 1.0] {
                        let mut fixings = node.fixings.clone();
                        fixings.push((v, val));
                        fixings.sort_by_key(|&(var, _)| var);
                        heap.push(Node { id: next_id, bound: value, fixings });
                        next_id += 1;
                    }
                }
            }
        }
    }

    stats.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    let n = full.n_vars;
    let status = if hit_limit {
        SolveStatus::NodeLimit
    } else if unbounded && incumbent.is_none() {
        SolveStatus::Unbounded
    } else if failures > 0 {
        SolveStatus::NumericalFailure
    } else if incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let mut out = match incumbent {
        Some(mut inc) => {
            for &v in &search.binaries {
                inc.primal[v] = inc.primal[v].round();
            }
            inc.status = status;
            inc
        }
        None => Solution::failed(status, n),
    };
    out.stats = stats;
    Ok(cast_solution(out))
}
