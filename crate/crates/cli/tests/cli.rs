use std::process::{Command, Output};

use serde_json::Value;

fn qinfra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qinfra")).args(args).env_remove("QINFRA_CYCLE_CAP").output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn regulator_delta_8() {
    let o = qinfra(&["regulator", "--disc", "8", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let r = v["result"]["r_prime"].as_f64().unwrap();
    assert!((r - 1.762747).abs() < 1.0);
    assert_eq!(v["command"], "regulator");
    assert!(v["build"].as_str().unwrap().starts_with("0.1.0-"));
    assert_eq!(v["config"]["disc"], "8");
    assert!(!v["provenance"].as_array().unwrap().is_empty());
}

#[test]
fn regulator_delta_12_notes_classical_path() {
    let o = qinfra(&["regulator", "--disc", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["result"]["path"], "classical");
}

#[test]
fn invalid_discriminant_exits_3() {
    let o = qinfra(&["regulator", "--disc", "7"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(json(&o)["result"]["error"].as_str().unwrap().contains("invalid discriminant"));
}

#[test]
fn q_outside_constraint_exits_3_unless_relaxed() {
    let o = qinfra(&["simulate", "--which", "regulator", "--disc", "60", "--q", "64"]);
    assert_eq!(o.status.code(), Some(3));
    let o = qinfra(&["simulate", "--which", "regulator", "--disc", "60", "--q", "64", "--relaxed"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn cap_exceeded_exits_4() {
    let o = qinfra(&["regulator", "--disc", "1009", "--cycle-cap", "2", "--force-quantum"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn env_var_sets_default_cycle_cap() {
    let o = Command::new(env!("CARGO_BIN_EXE_qinfra"))
        .args(["regulator", "--disc", "1009", "--force-quantum"])
        .env("QINFRA_CYCLE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["config"]["cycle_cap"], 2);
}

#[test]
fn pip_verdicts() {
    let o = qinfra(&["pip", "--disc", "40", "--form", "1,6,-1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["verdict"], "pip_distance");
    assert!(v["result"]["s_prime"].as_f64().unwrap().abs() < 1e-9);

    let o = qinfra(&["pip", "--disc", "40", "--form", "40:2,4,-3"]);
    assert_eq!(json(&o)["result"]["verdict"], "not_principal");

    let o = qinfra(&["pip", "--disc", "40", "--form", "1,2,3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.toml");
    std::fs::write(&p, "disc = 13\nseed = 4\nmax_attempts = 7\n").unwrap();
    let o = qinfra(&["regulator", "--config", p.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["config"]["disc"], "13");
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["max_attempts"], 7);

    std::fs::write(&p, "disk = 13\n").unwrap();
    assert_eq!(qinfra(&["regulator", "--config", p.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn reports_are_deterministic() {
    let args = ["regulator", "--disc", "229", "--force-quantum", "--seed", "5"];
    let a = qinfra(&args);
    let b = qinfra(&args);
    assert_eq!(a.stdout, b.stdout);
    let args = ["simulate", "--which", "pip", "--disc", "136", "--form", "1,10,-9", "--seed", "3"];
    assert_eq!(qinfra(&args).stdout, qinfra(&args).stdout);
}

#[test]
fn output_path_and_distribution_file() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let dist = dir.path().join("d.json");
    let o = qinfra(&[
        "simulate", "--which", "regulator", "--disc", "60", "--q", "256", "--relaxed", "--mode", "full", "--max-forms", "2",
        "--output", rep.to_str().unwrap(), "--dist", dist.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    let measured = r["result"]["measured_forms"].as_u64().unwrap();
    assert_eq!(r["result"]["reported_forms"].as_u64().unwrap(), measured.min(2));
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&dist).unwrap()).unwrap();
    assert_eq!(d["q"], 256);
    assert_eq!(d["dimension"], 1);
    for k in ["disc", "seed", "measured_form", "p", "m_min", "m_max", "r_plus_source"] {
        assert!(d.get(k).is_some(), "{k}");
    }
    let total: f64 = d["probabilities"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn pip_full_distribution_keys() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.json");
    let o = qinfra(&[
        "simulate", "--which", "pip", "--disc", "40", "--form", "2,4,-3", "--q", "16", "--relaxed", "--mode", "full",
        "--max-forms", "1", "--dist", dist.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&dist).unwrap()).unwrap();
    let key = d["probabilities"].as_object().unwrap().keys().next().unwrap().clone();
    assert_eq!(key.split(',').count(), 2);
}

#[test]
fn verify_lemmas_delta_60_passes_with_gating() {
    let o = qinfra(&["verify-lemmas", "--disc", "60"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let clauses = v["result"]["clauses"].as_array().unwrap();
    assert!(clauses.iter().any(|c| c["lemma"] == 2 && c["status"] == "skipped"));
    assert!(clauses.iter().all(|c| c["status"] != "fail"));
}

#[test]
fn verify_lemmas_delta_40_lattice() {
    let o = qinfra(&["verify-lemmas", "--disc", "40", "--pip-form", "2,4,-3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let c = v["result"]["clauses"].as_array().unwrap().iter().find(|c| c["lemma"] == 4 && c["status"] == "pass").cloned();
    assert!(c.is_some());
}

#[test]
fn resources_table_format() {
    let o = qinfra(&["resources", "--disc", "2^20", "--which", "pip", "--format", "table"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("result[0].registers[0].name"));
    assert!(s.contains("\"x1\""));
}

#[test]
fn find_disc_lists_ratios() {
    let o = qinfra(&["find-disc", "--min-ratio", "8", "--count", "2", "--max", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let f = v["result"]["found"].as_array().unwrap();
    assert_eq!(f.len(), 2);
    assert_eq!(f[0]["disc"], 409);
}
