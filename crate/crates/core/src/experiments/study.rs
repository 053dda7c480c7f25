use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knapsack::{exact_optimum, generate_knapsack};
use super::report::{optimality_gap, AggregateRow, ReportRow, StudyReport};
use super::transport::{estimate_transport_reliability, generate_transport, transport_cost, TransportParams};
use super::StudyError;
use crate::conic_ir::{ConeProgram, LinExpr, Solution, SolveStatus};
use crate::model::SampleSet;
use crate::reformulate::{
    build_binary_cvar_mip, build_transport_cvar_lp, BudgetRows, build_transport_saa_milp, TransportLayout, TransportNetwork,
};
use crate::solve::{branch_and_bound, branch_and_bound_with_incumbent, solve_continuous, BnbConfig, SolverAdapter};

fn status_name(s: SolveStatus) -> String {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::NumericalFailure => "numerical_failure",
        SolveStatus::NodeLimit => "node_limit",
    }
    .to_string()
}

fn has_point(s: &Solution<f64>) -> bool {
    matches!(s.status, SolveStatus::Optimal | SolveStatus::NodeLimit) && !s.primal.is_empty()
}

fn run_parallel<R: Send>(
    workers: usize,
    seeds: &[u64],
    job: impl Fn(u64) -> Result<R, StudyError> + Sync + Send,
) -> Result<Vec<R>, StudyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| StudyError::Config(e.to_string()))?;
    pool.install(|| seeds.par_iter().map(|&s| job(s)).collect())
}

fn elapsed_ms(clock: Instant, timing: bool) -> f64 {
    if timing {
        clock.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnapsackStudyConfig {
    pub items: usize,
    pub knapsacks: usize,
    pub n_samples: usize,
    pub risks: Vec<f64>,
    pub radii: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_test: usize,
    pub max_nodes: usize,
    /// Seeds run concurrently on this many threads.
    pub workers: usize,
    /// Record wall-clock times; off keeps reports byte-identical across runs.
    pub timing: bool,
}

impl Default for KnapsackStudyConfig {
    fn default() -> Self {
        Self {
            items: 10,
            knapsacks: 5,
            n_samples: 50,
            risks: vec![0.05, 0.10],
            radii: vec![0.01, 0.02],
            seeds: (0..20).collect(),
            n_test: 2000,
            max_nodes: 100_000,
            workers: 1,
            timing: false,
        }
    }
}

/// Binary CVaR model against the exact optimum found by enumeration, per seed and `(ε, δ)`.
pub fn run_knapsack_study(cfg: &KnapsackStudyConfig, adapter: &dyn SolverAdapter) -> Result<StudyReport, StudyError> {
    if cfg.risks.is_empty() || cfg.radii.is_empty() || cfg.seeds.is_empty() {
        return Err(StudyError::Config("knapsack study needs risks, radii and seeds".into()));
    }
    let bnb = BnbConfig { max_nodes: cfg.max_nodes, ..BnbConfig::default() };
    let per_seed = run_parallel(cfg.workers, &cfg.seeds, |seed| {
        let inst = generate_knapsack(seed, cfg.items, cfg.knapsacks, cfg.n_samples)?;
        let test = inst.test_samples(cfg.n_test);
        let mut rows = Vec::new();
        for &eps in &cfg.risks {
            for &delta in &cfg.radii {
                let problem = inst.to_problem(eps, delta);
                let clock = Instant::now();
                let (x_exact, opt) = exact_optimum(&problem)?;
                rows.push(ReportRow {
                    seed,
                    eps,
                    delta,
                    n_samples: cfg.n_samples,
                    model: "exact".into(),
                    objective: Some(opt),
                    opt_val: Some(opt),
                    gap: Some(0.0),
                    reliability: Some(inst.reliability(&x_exact, &test)),
                    wall_ms: elapsed_ms(clock, cfg.timing),
                    status: "optimal".into(),
                });
                let clock = Instant::now();
                let (prog, layout) = build_binary_cvar_mip(&problem)?;
                let sol = branch_and_bound(&prog, adapter, &bnb)?;
                let wall_ms = elapsed_ms(clock, cfg.timing);
                let (objective, gap, reliability) = if has_point(&sol) {
                    let x = layout.decision(&sol.primal);
                    let value = problem.objective_value(&x);
                    (Some(value), Some(optimality_gap(opt, value)), Some(inst.reliability(&x, &test)))
                } else {
                    (None, None, None)
                };
                rows.push(ReportRow {
                    seed,
                    eps,
                    delta,
                    n_samples: cfg.n_samples,
                    model: "cvar".into(),
                    objective,
                    opt_val: Some(opt),
                    gap,
                    reliability,
                    wall_ms,
                    status: status_name(sol.status),
                });
            }
        }
        Ok(rows)
    })?;
    let rows: Vec<ReportRow> = per_seed.into_iter().flatten().collect();
    let mut report = StudyReport {
        notes: vec![
            format!(
                "knapsack study: {} items, {} knapsacks, {} samples, {} test samples, {} seeds",
                cfg.items,
                cfg.knapsacks,
                cfg.n_samples,
                cfg.n_test,
                cfg.seeds.len()
            ),
            "exact optimum: enumeration of all binary points checked by the worst-case probability oracle".into(),
            "gap = (opt_val - objective) / opt_val".into(),
        ],
        rows,
        aggregates: Vec::new(),
    };
    for &eps in &cfg.risks {
        for &delta in &cfg.radii {
            for model in ["exact", "cvar"] {
                let sel = |r: &ReportRow| r.model == model && r.eps == eps && r.delta == delta;
                let cell = format!("{model}/eps={eps}/delta={delta}");
                let metrics: [(&str, fn(&ReportRow) -> Option<f64>); 3] =
                    [("objective", |r| r.objective), ("gap", |r| r.gap), ("reliability", |r| r.reliability)];
                for (name, metric) in metrics {
                    if model == "exact" && name == "gap" {
                        continue;
                    }
                    let vals = report.values(sel, metric);
                    report.aggregates.extend(AggregateRow::from_values(format!("{cell}/{name}"), &vals));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportStudyConfig {
    pub params: TransportParams,
    pub risk: f64,
    pub radii: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub n_test: usize,
    /// Also solve the sample-average model once per sample size.
    pub with_saa: bool,
    pub saa_max_nodes: usize,
    pub workers: usize,
    pub timing: bool,
}

impl Default for TransportStudyConfig {
    fn default() -> Self {
        Self {
            params: TransportParams { facilities: 3, customers: 4, ..TransportParams::default() },
            risk: 0.10,
            radii: (0..10).map(|k| 0.01 + 0.02 * k as f64).map(|v| (v * 100.0).round() / 100.0).collect(),
            sample_sizes: vec![10, 160],
            seeds: (0..10).collect(),
            n_test: 2000,
            with_saa: true,
            saa_max_nodes: 64,
            workers: 1,
            timing: false,
        }
    }
}

/// Fixes every binary of `prog` to `values` and drops the integrality marks.
fn fix_binaries(prog: &ConeProgram<f64>, vars: &[usize], values: &[f64]) -> ConeProgram<f64> {
    let mut p = prog.relaxation();
    for (&v, &val) in vars.iter().zip(values) {
        p.add_eq(LinExpr::from_terms(vec![(v, 1.0)], -val)).expect("binary index is in range");
    }
    p
}

/// Sample-average model: a greedy start (repeatedly ignore the costliest kept sample)
/// refined by node-limited branch-and-bound.
pub fn solve_transport_saa(
    net: &TransportNetwork<f64>,
    samples: &SampleSet<f64>,
    risk: f64,
    adapter: &dyn SolverAdapter,
    cfg: &BnbConfig,
) -> Result<(Solution<f64>, TransportLayout), StudyError> {
    let (prog, layout) = build_transport_saa_milp(net, samples, risk)?;
    let n = samples.n_samples();
    let required = ((1.0 - risk) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    let drops = n - required.min(n);
    let mut kept = vec![1.0; n];
    let mut start = None;
    for step in 0..=drops {
        let sol = solve_continuous(&fix_binaries(&prog, &layout.indicators, &kept), adapter)?;
        if sol.status != SolveStatus::Optimal {
            start = None;
            break;
        }
        if step == drops {
            start = Some(sol.primal);
            break;
        }
        let (a, b, _) = layout.decision(&sol.primal);
        let mut worst: Option<(f64, usize)> = None;
        for i in (0..n).filter(|&i| kept[i] == 1.0) {
            let c = transport_cost(samples.get(i), &a, &b)?;
            if worst.is_none_or(|(w, _)| c > w) {
                worst = Some((c, i));
            }
        }
        match worst {
            Some((_, i)) => kept[i] = 0.0,
            None => break,
        }
    }
    let sol = branch_and_bound_with_incumbent(&prog, adapter, cfg, start.as_deref())?;
    Ok((sol, layout))
}

/// Worst-case CVaR and sample-average transport models across radii and sample sizes.
pub fn run_transport_study(cfg: &TransportStudyConfig, adapter: &dyn SolverAdapter) -> Result<StudyReport, StudyError> {
    if cfg.radii.is_empty() || cfg.sample_sizes.is_empty() || cfg.seeds.is_empty() {
        return Err(StudyError::Config("transport study needs radii, sample sizes and seeds".into()));
    }
    let max_n = *cfg.sample_sizes.iter().max().expect("nonempty");
    let bnb = BnbConfig { max_nodes: cfg.saa_max_nodes, ..BnbConfig::default() };
    let per_seed = run_parallel(cfg.workers, &cfg.seeds, |seed| {
        let inst = generate_transport(seed, &cfg.params)?;
        let train = inst.training_samples(max_n);
        let test = inst.test_samples(cfg.n_test);
        let mut rows = Vec::new();
        for &n in &cfg.sample_sizes {
            let samples = SampleSet::new(train.samples[..n].to_vec())?;
            let mut record = |model: &str, delta: f64, sol: &Solution<f64>, layout: &TransportLayout, wall_ms: f64| {
                let (objective, reliability) = if has_point(sol) {
                    let (a, b, z) = layout.decision(&sol.primal);
                    (Some(z), Some(estimate_transport_reliability(&a, &b, z, &test.samples)?))
                } else {
                    (None, None)
                };
                rows.push(ReportRow {
                    seed,
                    eps: cfg.risk,
                    delta,
                    n_samples: n,
                    model: model.into(),
                    objective,
                    opt_val: None,
                    gap: None,
                    reliability,
                    wall_ms,
                    status: status_name(sol.status),
                });
                Ok::<(), StudyError>(())
            };
            for &delta in &cfg.radii {
                let clock = Instant::now();
                let (prog, layout) = build_transport_cvar_lp(&inst.network, &samples, cfg.risk, delta, BudgetRows::Shared)?;
                let sol = solve_continuous(&prog, adapter)?;
                record("drw", delta, &sol, &layout, elapsed_ms(clock, cfg.timing))?;
            }
            if cfg.with_saa {
                let clock = Instant::now();
                let (sol, layout) = solve_transport_saa(&inst.network, &samples, cfg.risk, adapter, &bnb)?;
                record("saa", 0.0, &sol, &layout, elapsed_ms(clock, cfg.timing))?;
            }
        }
        Ok((rows, train.clip_rate(), test.clip_rate()))
    })?;
    let k = per_seed.len() as f64;
    let train_clip = per_seed.iter().map(|r| r.1).sum::<f64>() / k;
    let test_clip = per_seed.iter().map(|r| r.2).sum::<f64>() / k;
    let rows: Vec<ReportRow> = per_seed.into_iter().flat_map(|r| r.0).collect();
    let mut report = StudyReport {
        notes: vec![
            format!(
                "transport study: {} facilities, {} customers, risk {}, {} test samples, {} seeds",
                cfg.params.facilities,
                cfg.params.customers,
                cfg.risk,
                cfg.n_test,
                cfg.seeds.len()
            ),
            format!("cost draws clipped into the support box: training {train_clip:.4}, test {test_clip:.4} of coordinates"),
            "sample-average rows with status node_limit report the best plan found".into(),
        ],
        rows,
        aggregates: Vec::new(),
    };
    for &n in &cfg.sample_sizes {
        let mut cells: Vec<(String, f64)> = cfg.radii.iter().map(|&d| ("drw".to_string(), d)).collect();
        if cfg.with_saa {
            cells.push(("saa".into(), 0.0));
        }
        for (model, delta) in cells {
            let sel = |r: &ReportRow| r.model == model && r.n_samples == n && r.delta == delta;
            let cell = format!("{model}/n={n}/delta={delta}");
            let rel = report.values(sel, |r| r.reliability);
            report.aggregates.extend(AggregateRow::from_values(format!("{cell}/reliability"), &rel));
            let obj = report.values(sel, |r| r.objective);
            report.aggregates.extend(AggregateRow::from_values(format!("{cell}/objective"), &obj));
        }
    }
    Ok(report)
}
