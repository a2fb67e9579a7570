use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn pluriflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pluriflow")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Copy of a shipped scenario with `edit` applied.
fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut doc = read_json(&scenario(name));
    edit(&mut doc);
    let path = dir.join(format!("{name}_edited.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

#[test]
fn solve_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = pluriflow(&["solve", arg(&scenario("disc_constant")), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("disc_constant: PASS"));
    for f in ["solution.csv", "ledger.json", "reports.json", "dictionary.json", "grid.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let reports = read_json(&out.join("reports.json"));
    assert_eq!(reports["pass"], Value::Bool(true));
}

#[test]
fn negative_density_exits_2_with_a_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "disc_constant", |d| d["g"]["value"] = (-1.0).into());
    let out = dir.path().join("out");
    let o = pluriflow(&["solve", arg(&path), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = read_json(&out.join("error.json"));
    assert_eq!(err["exit_code"], 2);
    assert!(err["sample"].is_object(), "{err}");
}

#[test]
fn understated_kappa_h_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "disc_f_linear", |d| d["h"]["kappa_h"] = 0.01.into());
    let out = dir.path().join("out");
    let o = pluriflow(&["solve", arg(&path), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let err = read_json(&out.join("error.json"));
    assert_eq!(err["kind"], "data");
    assert!(err["sample"]["observed"].as_f64().unwrap() > err["sample"]["bound"].as_f64().unwrap());
}

#[test]
fn unknown_check_is_rejected() {
    let o = pluriflow(&["solve", arg(&scenario("disc_constant")), "--checks", "error,nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonsense"));
}

#[test]
fn stored_solution_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let sc = scenario("disc_constant");
    assert_eq!(pluriflow(&["solve", arg(&sc), "--out", arg(&out)]).status.code(), Some(0));
    let again = dir.path().join("verify");
    let o = pluriflow(&["verify", arg(&out.join("solution.csv")), arg(&sc), "--out", arg(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&again.join("reports.json"))["pass"], Value::Bool(true));
}

#[test]
fn study_of_an_exact_solution_saturates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let o = pluriflow(&["study", arg(&scenario("disc_constant")), "--ladder", "1/4,1/8", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let study = read_json(&out.join("study.json"));
    let levels = study["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert!(levels.iter().all(|l| l["saturated"] == Value::Bool(true) && l["order"].is_null()));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let sc = scenario("disc_f_linear");
    for out in [&a, &b] {
        let o = pluriflow(&["solve", arg(&sc), "--out", arg(out), "--checks", "error,residual"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path| std::fs::read(p.join("solution.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
