use std::path::Path;
use std::process::Command;

use orlicz_duality::cli::scenario::{parse_scenario, LossBoundSpec, SolverSpec};
use orlicz_duality::cli::CliError;

const BIN: &str = env!("CARGO_BIN_EXE_orlicz-duality");

const BINOMIAL: &str = r#"{
  "market": {"kind": "binomial", "s0": 1.0, "up": 1.2, "down": 0.9, "p_up": 0.5, "periods": 2},
  "utility": {"family": "exponential", "gamma": 1.0}
}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(BIN).args(args).output().expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn defaults_are_filled() {
    let s = parse_scenario(BINOMIAL).unwrap();
    assert_eq!(s.x, 0.0);
    assert_eq!(s.seed, 0);
    assert_eq!(s.c_max, None);
    assert_eq!(s.loss_bound, LossBoundSpec::default());
    assert_eq!(s.solver, SolverSpec::default());
    assert_eq!(s.solver.tolerance, 1e-8);
}

#[test]
fn unknown_family_is_reported_with_its_location() {
    let doc = BINOMIAL.replace("\"exponential\"", "\"quadratic\"");
    match parse_scenario(&doc) {
        Err(CliError::Parse { path, line, .. }) => {
            assert!(path.contains("utility"), "{path}");
            assert_eq!(line, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_field_is_rejected() {
    let doc = BINOMIAL.replace("\"gamma\"", "\"gama\"");
    assert!(matches!(parse_scenario(&doc), Err(CliError::Parse { .. })));
}

#[test]
fn endowment_below_the_domain_is_a_validation_error() {
    let doc = r#"{"market": {"kind": "binomial", "s0": 1, "up": 1.2, "down": 0.9, "p_up": 0.5},
                  "utility": {"family": "log_shifted", "a": -1.0}, "x": -1.5}"#;
    match parse_scenario(doc) {
        Err(CliError::Validation(v)) => assert!(v.iter().any(|m| m.starts_with('x')), "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn solve_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", BINOMIAL);
    let (code, out, err) = run(&["solve", &f]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("gap"), "{out}");
}

#[test]
fn deterministic_market_value_is_the_utility_of_the_endowment() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"market": {"kind": "constant", "s0": [1.0], "probs": [0.25, 0.75]},
                  "utility": {"family": "log_shifted", "a": -2.0}, "x": 1.0}"#;
    let f = write(dir.path(), "c.json", doc);
    let csv = dir.path().join("c.csv");
    let (code, _, err) = run(&["solve", &f, "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    let primal: f64 = row[1].parse().unwrap();
    let dual: f64 = row[2].parse().unwrap();
    assert!((primal - 3f64.ln()).abs() <= 1e-12);
    assert!((dual - 3f64.ln()).abs() <= 1e-10);
}

#[test]
fn arbitrage_exits_one_with_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"market": {"kind": "one_period", "s0": [1.0],
                  "outcomes": [{"prob": 0.5, "prices": [1.1]}, {"prob": 0.5, "prices": [1.3]}]},
                  "utility": {"family": "exponential"}}"#;
    let f = write(dir.path(), "a.json", doc);
    let (code, _, err) = run(&["solve", &f]);
    assert_eq!(code, 1);
    assert!(err.to_lowercase().contains("arbitrage"), "{err}");
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "b.json", &BINOMIAL.replace("\"exponential\"", "\"quadratic\""));
    assert_eq!(run(&["solve", &f]).0, 2);
    assert_eq!(run(&["solve", "/nonexistent/scenario.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["orlicz", "norm", "--family", "log", "--a=-1", "--values", "1", "--probs", "0.5"]).0, 2);
}

#[test]
fn duality_check_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, err) = run(&["duality-check", "--trials", "25", "--seed", "7", "--csv", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().starts_with("seed,value_primal,value_dual,gap,budget_residual,lambda_star"));
}

#[test]
fn solve_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"market": {"kind": "random", "states": 6, "assets": 2},
                  "utility": {"family": "log_shifted", "a": -2.0}, "seed": 11}"#;
    let f = write(dir.path(), "r.json", doc);
    let outs: Vec<Vec<u8>> = ["x.csv", "y.csv"]
        .iter()
        .map(|n| {
            let p = dir.path().join(n);
            assert_eq!(run(&["solve", &f, "--csv", p.to_str().unwrap()]).0, 0);
            std::fs::read(p).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn reproduce_commands_pass() {
    for ex in ["ex35", "ex36", "ex37", "ex38"] {
        let (code, out, err) = run(&["reproduce", ex]);
        assert_eq!(code, 0, "{ex}: {out}{err}");
    }
}

#[test]
fn truncation_study_runs() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"scenario": {"kind": "ex35", "nu": 1.0}, "levels": [2, 4]}"#;
    let f = write(dir.path(), "t.json", doc);
    let (code, out, err) = run(&["truncation-study", &f]);
    assert_eq!(code, 0, "{out}{err}");
}
