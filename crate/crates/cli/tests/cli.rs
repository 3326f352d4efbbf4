use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_feynrec");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bundled(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("FEYNREC_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).expect("one JSON value per line")).collect()
}

fn check<'a>(recs: &'a [Value], name: &str) -> &'a Value {
    recs.iter()
        .find(|r| r["name"].as_str().is_some_and(|n| n.contains(name)))
        .unwrap_or_else(|| panic!("no check named {name:?}"))
}

fn temp_config(file: &str, text: &str) -> String {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(file);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const IDENTITY_MODEL: &str = r#"
schema_version = 1

[[systems]]
name = "s"
reference = "M"
dim = 3

[[sequences]]
name = "stay"
events = [{ time = 0, measurement = "M", outcome = 2 }, { time = 1, measurement = "M", outcome = 2 }]
"#;

#[test]
fn bundled_configs_validate() {
    for c in ["spin.toml", "qutrit.toml", "pair.toml"] {
        let o = run(&["validate", &bundled(c), "--tuples", "100"]);
        assert!(o.status.success(), "{c}: {}", stdout(&o));
    }
}

#[test]
fn non_unitary_matrix_is_named() {
    let text = std::fs::read_to_string(configs().join("spin.toml")).unwrap().replace("[0.6, -0.8]", "[0.6, -0.9]");
    let path = temp_config("non_unitary.toml", &text);
    let o = run(&["--jsonl", "validate", &path, "--tuples", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let recs = records(&o);
    assert_eq!(check(&recs, "unitary interaction rot")["status"], "fail");
    assert_eq!(check(&recs, "unitary frame X")["status"], "pass");
    // Other commands refuse to load it.
    let o = run(&["reconstruct", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rot"));
}

#[test]
fn malformed_config_is_a_parse_error_with_location() {
    let path = temp_config("malformed.toml", "schema_version = 1\n[[systems]]\nname = \"s\"\ndim = \"two\"\n");
    let o = run(&["validate", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("parse error") && err.contains("line 4"), "{err}");
}

#[test]
fn identity_model_transition_has_unit_amplitude() {
    let path = temp_config("identity.toml", IDENTITY_MODEL);
    let o = run(&["--jsonl", "amplitude", &path, "stay"]);
    assert!(o.status.success());
    let recs = records(&o);
    let detail = check(&recs, "sequence stay")["detail"].as_str().unwrap();
    assert!(detail.contains("amplitude +1.000000+0.000000i probability 1.000000000000"), "{detail}");
}

#[test]
fn coarse_middle_outcome_is_sum_of_refinements() {
    let o = run(&["--jsonl", "amplitude", &bundled("spin.toml"), "x-either"]);
    assert!(o.status.success());
    let recs = records(&o);
    assert_eq!(check(&recs, "sum rule over atomic refinements")["status"], "pass");
    assert_eq!(check(&recs, "sum rule (parallel)")["status"], "pass");
    for (seq, rule) in [("x-up-then-x", "product rule"), ("x-up-reversed", "inverse is conjugate")] {
        let recs = records(&run(&["--jsonl", "amplitude", &bundled("spin.toml"), seq]));
        assert_eq!(check(&recs, rule)["status"], "pass");
    }
    let recs = records(&run(&["--jsonl", "amplitude", &bundled("pair.toml"), "joint-path"]));
    assert_eq!(check(&recs, "composite rule")["status"], "pass");
}

#[test]
fn unknown_sequence_is_a_usage_error() {
    let o = run(&["amplitude", &bundled("spin.toml"), "missing"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown sequence"));
}

#[test]
fn spin_repeat_scenario() {
    let o = run(&["--jsonl", "check-nd", &bundled("spin.toml"), "--scenario", "repeat-z"]);
    assert!(o.status.success());
    let recs = records(&o);
    let nd = check(&recs, "trivial measurement leaves probabilities unchanged");
    assert!(nd["residual"].as_f64().unwrap() <= 1e-12);
    let table = &check(&recs, "repeat-z: predictions")["table"];
    assert!((table[0]["values"][2].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert_eq!(check(&recs, "classical prediction matches expectation")["status"], "pass");
}

#[test]
fn zero_tolerance_exposes_rounding() {
    // The repeat layout picks up one rounding error in the last place.
    let o = run(&["check-nd", &bundled("spin.toml"), "--scenario", "repeat-z", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["check-nd", &bundled("spin.toml"), "--scenario", "rotated-chain", "--tol", "0"]);
    assert!(o.status.success());
}

#[test]
fn monte_carlo_table_is_reproducible() {
    let args = ["--jsonl", "check-nd", &bundled("qutrit.toml"), "--runs", "20000"];
    let a = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, run(&args).stdout);
    let recs = records(&a);
    let mc = check(&recs, "coarse-fourier: Monte-Carlo");
    assert_eq!(mc["columns"][1], "frequency");
    assert_eq!(mc["table"].as_array().unwrap().len(), 3);
    let other = run(&["--jsonl", "--seed", "7", "check-nd", &bundled("qutrit.toml"), "--runs", "20000"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn seed_comes_from_environment() {
    let args = ["--jsonl", "check-nd", &bundled("spin.toml"), "--runs", "5000"];
    let from_env = Command::new(BIN).args(args).env("FEYNREC_SEED", "42").output().unwrap();
    let from_flag = run(&["--jsonl", "--seed", "42", "check-nd", &bundled("spin.toml"), "--runs", "5000"]);
    assert_eq!(from_env.stdout, from_flag.stdout);
    assert!(stdout(&from_env).contains("seed 42"));
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let o = run(&["check-nd", &bundled("spin.toml"), "--scenario", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identity_model_reconstructs_basis_states() {
    let path = temp_config("identity_reconstruct.toml", IDENTITY_MODEL);
    let o = run(&["--jsonl", "reconstruct", &path]);
    assert!(o.status.success());
    let recs = records(&o);
    let detail = check(&recs, "states prepared by M")["detail"].as_str().unwrap();
    assert!(detail.starts_with("u1 = (+1.000000+0.000000i, +0.000000+0.000000i, +0.000000+0.000000i)"), "{detail}");
}

#[test]
fn bundled_models_reconstruct() {
    for c in ["spin.toml", "qutrit.toml", "pair.toml"] {
        let o = run(&["reconstruct", &bundled(c)]);
        assert!(o.status.success(), "{c}: {}", stdout(&o));
    }
    let recs = records(&run(&["--jsonl", "reconstruct", &bundled("pair.toml")]));
    assert_eq!(check(&recs, "left x right: composite state is the tensor product")["status"], "pass");
}

#[test]
fn composition_table() {
    let o = run(&["--jsonl", "check-composition", "--samples", "2000"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let recs = records(&o);
    assert_eq!(check(&recs, "F = u·v: satisfies every axiom")["status"], "pass");
    let conj = check(&recs, "F = u*·v*: rejected");
    assert!(conj["witness"].as_str().unwrap().contains("fixed-point fails at +0.000000+1.000000i"));
    assert!(check(&recs, "F = 0: rejected")["witness"].as_str().unwrap().contains("inadmissible"));
    assert_eq!(check(&recs, "f(z) = z²")["status"], "pass");
}

#[test]
fn action_defaults_pass() {
    let o = run(&["--jsonl", "action", "--paths", "300"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let recs = records(&o);
    assert!(check(&recs, "path at rest")["detail"].as_str().unwrap().contains("S = 0.000000000000, amplitude +1.000000+0.000000i"));
    assert!(check(&recs, "lattice propagator modulus")["residual"].as_f64().unwrap() <= 0.02);
    assert_eq!(check(&recs, "exp(x + i x) rejected")["status"], "pass");
}

#[test]
fn action_resource_limit_and_bad_lagrangian() {
    assert_eq!(run(&["action", "--sites", "1000"]).status.code(), Some(2));
    assert_eq!(run(&["action", "--lagrangian", "quartic"]).status.code(), Some(2));
    assert_eq!(run(&["action", "--lagrangian", "harmonic"]).status.code(), Some(2));
    let o = run(&["action", "--lagrangian", "harmonic", "--omega", "0.5", "--paths", "50"]);
    assert!(o.status.success());
}

#[test]
fn action_from_config_scenario() {
    let o = run(&["action", "--config", &bundled("spin.toml"), "--scenario", "revival", "--paths", "50"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn jsonl_records_have_stable_fields_and_optional_timings() {
    let o = run(&["--jsonl", "check-composition", "--samples", "200"]);
    let recs = records(&o);
    let (last, checks) = recs.split_last().unwrap();
    for r in checks {
        assert!(r["name"].is_string());
        assert!(["pass", "fail", "info"].contains(&r["status"].as_str().unwrap()));
        assert!(r.get("elapsed_ms").is_none());
    }
    assert_eq!(last["summary"]["verdict"], "pass");
    assert_eq!(last["summary"]["command"], "check-composition");
    let timed = run(&["--jsonl", "--timings", "check-composition", "--samples", "200"]);
    assert!(stdout(&timed).contains("elapsed_ms"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check-nd"]).status.code(), Some(2));
    assert_eq!(run(&["check-composition", "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn no_validate_loads_non_unitary_models() {
    let text = std::fs::read_to_string(configs().join("spin.toml")).unwrap().replace("[0.6, -0.8]", "[0.6, -0.9]");
    let path = temp_config("non_unitary_loose.toml", &text);
    let o = run(&["--no-validate", "amplitude", &path, "z-to-x"]);
    assert!(o.status.success());
}
