use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn drccp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drccp"))
        .args(args)
        .env_remove("DRCCP_SOLVER")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn knapsack_file(name: &str, seed: &str) -> String {
    let path = scratch(name);
    let p = path.to_str().unwrap();
    let out = drccp(&["generate", "knapsack", "--n", "5", "--t", "2", "--samples", "12", "--seed", seed, "-o", p]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    p.to_string()
}

#[test]
fn generation_is_byte_identical_across_runs() {
    let a = drccp(&["generate", "knapsack", "--n", "4", "--t", "3", "--samples", "8", "--seed", "11"]);
    let b = drccp(&["generate", "knapsack", "--n", "4", "--t", "3", "--samples", "8", "--seed", "11"]);
    let c = drccp(&["generate", "knapsack", "--n", "4", "--t", "3", "--samples", "8", "--seed", "12"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let t1 = drccp(&["generate", "transport", "--samples", "5", "--seed", "2"]);
    let t2 = drccp(&["generate", "transport", "--samples", "5", "--seed", "2"]);
    assert_eq!(t1.status.code(), Some(0));
    assert_eq!(t1.stdout, t2.stdout);
    assert_eq!(stdout_json(&t1)["kind"], "transport");
}

#[test]
fn help_and_version_exit_zero_and_bad_flags_exit_one() {
    assert_eq!(drccp(&["--help"]).status.code(), Some(0));
    assert_eq!(drccp(&["--version"]).status.code(), Some(0));
    assert_eq!(drccp(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(drccp(&[]).status.code(), Some(1));
    let out = drccp(&["oracle", "--problem", "/nonexistent/file.json", "--x", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_solver_is_a_configuration_error() {
    let k = knapsack_file("k_solver.json", "1");
    let out = drccp(&["--solver", "nope", "solve", "--problem", &k, "--model", "cvar"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn oracle_at_zero_decision_reports_zero_probability() {
    let k = knapsack_file("k_oracle.json", "7");
    let out = drccp(&["oracle", "--problem", &k, "--x", "0,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["probability"], json!(0.0));
    assert_eq!(v["member"], json!(true));
    let wrong = drccp(&["oracle", "--problem", &k, "--x", "0,0"]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn build_then_solve_matches_the_fused_solve() {
    let k = knapsack_file("k_fused.json", "3");
    for model in ["cvar", "binary-cvar", "saa"] {
        let prog = scratch(&format!("prog_{model}.txt"));
        let p = prog.to_str().unwrap();
        assert_eq!(drccp(&["build", model, "--problem", &k, "-o", p]).status.code(), Some(0));
        let staged = drccp(&["solve", "--program", p]);
        let fused = drccp(&["solve", "--problem", &k, "--model", model]);
        assert_eq!(staged.status.code(), Some(0), "{model}");
        assert_eq!(staged.stdout, fused.stdout, "{model}");
        assert_eq!(stdout_json(&fused)["status"], "optimal");
    }
}

#[test]
fn binary_solution_respects_the_oracle() {
    let k = knapsack_file("k_member.json", "5");
    let sol = stdout_json(&drccp(&["solve", "--problem", &k, "--model", "binary-cvar"]));
    let x: Vec<String> = sol["variables"]["x"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap().to_string()).collect();
    let out = drccp(&["oracle", "--problem", &k, "--x", &x.join(",")]);
    assert_eq!(stdout_json(&out)["member"], json!(true));
}

#[test]
fn mixed_constraint_families_are_rejected() {
    let eye = json!([[1.0, 0.0], [0.0, 1.0]]);
    let problem = json!({
        "kind": "problem",
        "objective": [1.0, 1.0],
        "domain": { "Box": { "lower": [0.0, 0.0], "upper": [1.0, 1.0] } },
        "constraints": [
            { "AffineBoth": { "xi_coupling": eye, "xi_offset": [0.0, 0.0], "x_coeffs": [0.0, 0.0], "constant": 1.0 } },
            { "QuadraticXi": { "curvature": eye, "x_coeffs": [0.0, 0.0], "constant": 1.0 } }
        ],
        "risk": 0.1,
        "ball": { "radius": 0.1, "norm": "L2", "center": { "samples": [[0.0, 0.0], [1.0, 1.0]] } },
        "support": { "FullSpace": { "dim": 2 } },
        "sense": "Maximize"
    });
    let path = scratch("mixed.json");
    fs::write(&path, problem.to_string()).unwrap();
    let out = drccp(&["build", "cvar", "--problem", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn transport_files_drive_the_transport_models() {
    let path = scratch("t.json");
    let p = path.to_str().unwrap();
    let gen = drccp(&["generate", "transport", "--facilities", "2", "--customers", "3", "--samples", "4", "--seed", "9", "-o", p]);
    assert_eq!(gen.status.code(), Some(0));
    let cvar = drccp(&["solve", "--problem", p, "--model", "transport-cvar"]);
    assert_eq!(cvar.status.code(), Some(0), "{}", String::from_utf8_lossy(&cvar.stderr));
    assert!(stdout_json(&cvar)["objective"].as_f64().unwrap() > 0.0);
    assert_eq!(drccp(&["build", "cvar", "--problem", p]).status.code(), Some(1));
    let k = knapsack_file("k_transport.json", "2");
    assert_eq!(drccp(&["build", "transport-cvar", "--problem", &k]).status.code(), Some(1));
}

#[test]
fn infeasible_solve_exits_two() {
    // Every item forced in and a capacity of 1 against weights of at least 1.
    let k = knapsack_file("k_forced.json", "4");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&k).unwrap()).unwrap();
    v["domain"] = json!({ "Box": { "lower": vec![1.0; 5], "upper": vec![1.0; 5] } });
    v["constraints"][0]["AffineBoth"]["constant"] = json!(1.0);
    let path = scratch("forced.json");
    fs::write(&path, v.to_string()).unwrap();
    let out = drccp(&["solve", "--problem", path.to_str().unwrap(), "--model", "cvar"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["status"], "infeasible");
}

#[test]
fn knapsack_study_csv_is_deterministic() {
    let args = ["study", "knapsack", "--n", "10", "--t", "5", "--samples", "50", "--eps", "0.10", "--delta", "0.01", "--seed", "7"];
    let a = drccp(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = drccp(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut table = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = table.next().unwrap().split(',').collect();
    assert!(header.contains(&"gap"), "{header:?}");
    assert_eq!(table.count(), 2);
}

#[test]
fn study_rejects_empty_grids() {
    let out = drccp(&["study", "knapsack", "--n", "3", "--t", "1", "--samples", "5", "--instances", "0"]);
    assert_eq!(out.status.code(), Some(1));
}
