//! `drccp`: generate instances, build and solve reformulations, query the
//! worst-case probability oracle and run the parameter studies.
//!
//! Exit codes: 0 on success, 1 when input or configuration is rejected,
//! 2 when a solve does not end optimal.

mod files;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drccp_core::conic_ir::{ConeProgram, Solution, SolveStatus};
use drccp_core::experiments::{
    generate_knapsack, generate_transport, run_knapsack_study, run_transport_study, KnapsackStudyConfig,
    StudyError, StudyReport, TransportParams, TransportStudyConfig,
};
use drccp_core::model::{validate_problem, DrccpProblem, SampleSet};
use drccp_core::oracle::check_zd_membership;
use drccp_core::reformulate::{
    build_binary_cvar_mip, build_cvar_relaxation, build_robust_membership, build_saa_milp, build_transport_cvar_lp,
    build_transport_saa_milp, BudgetRows, ReformError,
};
use drccp_core::solve::{adapter_by_name, solve_program, BnbConfig, SolveError, SOLVER_ENV};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use files::{InputFile, TransportFile};

#[derive(Parser, Debug, Serialize)]
#[command(name = "drccp", version, about = "Wasserstein distributionally robust chance-constrained programs")]
pub struct Cli {
    /// Solver adapter: auto, clarabel or dense-ipm.
    #[arg(long, global = true, env = SOLVER_ENV, default_value = "auto")]
    solver: String,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a random instance file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Build a reformulation and write it in the text program format.
    Build {
        model: Model,
        #[arg(long)]
        problem: PathBuf,
    },
    /// Solve a program file, or build and solve a model of a problem file.
    Solve(SolveArgs),
    /// Worst-case violation probability of a candidate decision.
    Oracle {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated decision vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Run a parameter study and print the per-solve table.
    Study {
        #[command(subcommand)]
        kind: StudyKind,
    },
}

#[derive(Subcommand, Debug, Serialize)]
enum GenerateKind {
    Knapsack {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        t: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Transport {
        #[arg(long, default_value_t = 4)]
        facilities: usize,
        #[arg(long, default_value_t = 6)]
        customers: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Model {
    Cvar,
    BinaryCvar,
    Saa,
    Robust,
    TransportCvar,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    /// Program in the text format written by `build`.
    #[arg(long, conflicts_with_all = ["problem", "model"], required_unless_present = "problem")]
    program: Option<PathBuf>,
    #[arg(long, requires = "model")]
    problem: Option<PathBuf>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long, default_value_t = 100_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    JsonLines,
}

#[derive(Args, Debug, Serialize)]
struct StudyCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances; seeds run from `seed` upward.
    #[arg(long, default_value_t = 1)]
    instances: u64,
    #[arg(long, default_value_t = 2000)]
    test_samples: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record wall-clock times (off by default so output is reproducible byte for byte).
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write the aggregate table here (CSV only).
    #[arg(long)]
    aggregates: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
enum StudyKind {
    Knapsack {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        t: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.01")]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        max_nodes: usize,
        #[command(flatten)]
        common: StudyCommon,
    },
    Transport {
        #[arg(long, default_value_t = 3)]
        facilities: usize,
        #[arg(long, default_value_t = 4)]
        customers: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,160")]
        samples: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.05,0.07,0.09,0.11,0.13,0.15,0.17,0.19")]
        delta: Vec<f64>,
        /// Skip the sample-average model.
        #[arg(long)]
        no_saa: bool,
        #[arg(long, default_value_t = 64)]
        saa_max_nodes: usize,
        #[command(flatten)]
        common: StudyCommon,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Rejected input, configuration or problem data.
    Invalid(String),
    /// A solve ended without an optimal point.
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Solver(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<ReformError> for CliError {
    fn from(e: ReformError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::UnknownAdapter(_) | SolveError::Config(_) | SolveError::UnsupportedCone { .. } => {
                CliError::Invalid(e.to_string())
            }
            SolveError::IntegralityPresent => CliError::Solver(e.to_string()),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Solve(s) => s.into(),
            StudyError::Defect(_) => CliError::Solver(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    eprintln!("{}", json!({ "config": &cli }));
    match run(&cli) {
        Ok(out) => match write_output(cli.output.as_ref(), &out) {
            Ok(()) => 0,
            Err(e) => report(&e),
        },
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> u8 {
    eprintln!("error: {}", e.message());
    e.code()
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Generate { kind } => generate(kind),
        Command::Build { model, problem } => {
            let input = InputFile::parse(&read(problem)?)?;
            Ok(build(&input, *model)?.to_text())
        }
        Command::Solve(args) => solve(args, &cli.solver),
        Command::Oracle { problem, x } => oracle(&InputFile::parse(&read(problem)?)?, x),
        Command::Study { kind } => study(kind, &cli.solver),
    }
}

fn generate(kind: &GenerateKind) -> Result<String, CliError> {
    let file = match *kind {
        GenerateKind::Knapsack { n, t, samples, eps, delta, seed } => {
            InputFile::Problem(generate_knapsack(seed, n, t, samples)?.to_problem(eps, delta))
        }
        GenerateKind::Transport { facilities, customers, samples, eps, delta, seed } => {
            let params = TransportParams { facilities, customers, ..TransportParams::default() };
            let inst = generate_transport(seed, &params)?;
            let draws = inst.training_samples(samples);
            InputFile::Transport(TransportFile {
                network: inst.network,
                samples: SampleSet::new(draws.samples).map_err(|e| CliError::Invalid(e.to_string()))?,
                risk: eps,
                radius: delta,
                clip_rate: draws.clipped as f64 / (samples * facilities * customers).max(1) as f64,
                seed,
            })
        }
    };
    file.check()?;
    Ok(pretty(&file))
}

fn require_problem(input: &InputFile, model: Model) -> Result<&DrccpProblem<f64>, CliError> {
    match input {
        InputFile::Problem(p) => {
            let diags = validate_problem(p);
            if !diags.is_empty() {
                let list: Vec<String> = diags.iter().map(ToString::to_string).collect();
                return Err(CliError::Invalid(list.join("; ")));
            }
            Ok(p)
        }
        InputFile::Transport(_) => {
            Err(CliError::Invalid(format!("model {model:?} needs a problem file, got a transport instance")))
        }
    }
}

fn build(input: &InputFile, model: Model) -> Result<ConeProgram<f64>, CliError> {
    Ok(match (model, input) {
        (Model::Saa, InputFile::Transport(t)) => build_transport_saa_milp(&t.network, &t.samples, t.risk)?.0,
        (Model::TransportCvar, InputFile::Transport(t)) => {
            build_transport_cvar_lp(&t.network, &t.samples, t.risk, t.radius, BudgetRows::PerSample)?.0
        }
        (Model::TransportCvar, InputFile::Problem(_)) => {
            return Err(CliError::Invalid("model transport-cvar needs a transport instance file".into()))
        }
        (Model::Cvar, _) => build_cvar_relaxation(require_problem(input, model)?)?.0,
        (Model::BinaryCvar, _) => build_binary_cvar_mip(require_problem(input, model)?)?.0,
        (Model::Saa, _) => build_saa_milp(require_problem(input, model)?)?.0,
        (Model::Robust, _) => build_robust_membership(require_problem(input, model)?)?.program,
    })
}

/// Scalar and singly indexed named variables, grouped by name.
fn named_values(prog: &ConeProgram<f64>, primal: &[f64]) -> Map<String, Value> {
    let mut out = Map::new();
    for (&v, name) in &prog.variable_names {
        let value = json!(primal[v]);
        match name.split_once('[') {
            None => {
                out.insert(name.clone(), value);
            }
            Some((base, rest)) => {
                let Some(idx) = rest.strip_suffix(']').and_then(|s| s.parse::<usize>().ok()) else { continue };
                let entry = out.entry(base.to_string()).or_insert_with(|| Value::Array(Vec::new()));
                if let Value::Array(list) = entry {
                    if list.len() <= idx {
                        list.resize(idx + 1, Value::Null);
                    }
                    list[idx] = value;
                }
            }
        }
    }
    out
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::NumericalFailure => "numerical_failure",
        SolveStatus::NodeLimit => "node_limit",
    }
}

fn solution_json(prog: &ConeProgram<f64>, sol: &Solution<f64>) -> Value {
    let finite = sol.primal.iter().all(|v| v.is_finite());
    json!({
        "status": status_name(sol.status),
        "objective": if sol.objective_value.is_finite() { json!(sol.objective_value) } else { Value::Null },
        "nodes": sol.stats.nodes,
        "variables": if finite { Value::Object(named_values(prog, &sol.primal)) } else { Value::Null },
    })
}

fn solve(args: &SolveArgs, solver: &str) -> Result<String, CliError> {
    let prog = match (&args.program, &args.problem, args.model) {
        (Some(path), _, _) => ConeProgram::<f64>::from_text(&read(path)?).map_err(|e| CliError::Invalid(e.to_string()))?,
        (None, Some(path), Some(model)) => build(&InputFile::parse(&read(path)?)?, model)?,
        _ => return Err(CliError::Invalid("give --program, or --problem with --model".into())),
    };
    let adapter = adapter_by_name(solver)?;
    let cfg = BnbConfig { max_nodes: args.max_nodes, workers: args.workers, ..BnbConfig::default() };
    let sol = solve_program(&prog, adapter.as_ref(), &cfg)?;
    let text = pretty(&solution_json(&prog, &sol));
    if sol.status == SolveStatus::Optimal {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::Solver(format!("solve ended with status {}", status_name(sol.status))))
    }
}

fn oracle(input: &InputFile, x: &[f64]) -> Result<String, CliError> {
    let p = require_problem(input, Model::Cvar)?;
    if x.len() != p.n_vars() {
        return Err(CliError::Invalid(format!("--x has {} entries, the problem has {} decisions", x.len(), p.n_vars())));
    }
    let (member, est) = check_zd_membership(x, p).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(pretty(&json!({
        "probability": est.probability,
        "risk": p.risk,
        "member": member,
        "lambda": est.lambda_star,
    })))
}

fn seeds(c: &StudyCommon) -> Result<Vec<u64>, CliError> {
    if c.instances == 0 {
        return Err(CliError::Invalid("--instances must be positive".into()));
    }
    Ok((c.seed..c.seed + c.instances).collect())
}

fn render(report: &StudyReport, c: &StudyCommon) -> Result<String, CliError> {
    if let Some(path) = &c.aggregates {
        write_output(Some(path), &report.aggregates_csv()?)?;
    }
    Ok(match c.format {
        Format::Csv => report.rows_csv()?,
        Format::JsonLines => report.to_json_lines()?,
    })
}

fn study(kind: &StudyKind, solver: &str) -> Result<String, CliError> {
    let adapter = adapter_by_name(solver)?;
    match kind {
        StudyKind::Knapsack { n, t, samples, eps, delta, max_nodes, common } => {
            let cfg = KnapsackStudyConfig {
                items: *n,
                knapsacks: *t,
                n_samples: *samples,
                risks: eps.clone(),
                radii: delta.clone(),
                seeds: seeds(common)?,
                n_test: common.test_samples,
                max_nodes: *max_nodes,
                workers: common.workers,
                timing: common.timing,
            };
            render(&run_knapsack_study(&cfg, adapter.as_ref())?, common)
        }
        StudyKind::Transport { facilities, customers, samples, eps, delta, no_saa, saa_max_nodes, common } => {
            let cfg = TransportStudyConfig {
                params: TransportParams { facilities: *facilities, customers: *customers, ..TransportParams::default() },
                risk: *eps,
                radii: delta.clone(),
                sample_sizes: samples.clone(),
                seeds: seeds(common)?,
                n_test: common.test_samples,
                with_saa: !no_saa,
                saa_max_nodes: *saa_max_nodes,
                workers: common.workers,
                timing: common.timing,
            };
            render(&run_transport_study(&cfg, adapter.as_ref())?, common)
        }
    }
}
