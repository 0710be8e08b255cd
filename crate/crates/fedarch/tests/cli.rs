use std::path::Path;
use std::process::{Command, Output};

use fedarch_core::{run_simulation, PatternCatalog, SimConfig};

fn fedarch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedarch")).args(args).env_remove("FEDARCH_CATALOG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn catalog_validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedarch(&["catalog", "validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("15 patterns"));

    let good = write(dir.path(), "canonical.json", &PatternCatalog::canonical().to_json_string());
    assert_eq!(fedarch(&["catalog", "validate", &good]).status.code(), Some(0));

    let mut broken: serde_json::Value = serde_json::from_str(&PatternCatalog::canonical().to_json_string()).unwrap();
    let models = broken["decision_models"].as_array_mut().unwrap();
    let relations = models[0]["relations"].as_array_mut().unwrap();
    relations.retain(|r| r["kind"] != "alternative");
    let bad = write(dir.path(), "bad.json", &broken.to_string());
    let o = fedarch(&["catalog", "validate", &bad]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));

    let garbage = write(dir.path(), "garbage.json", "{ nope");
    assert_eq!(fedarch(&["catalog", "validate", &garbage]).status.code(), Some(3));
    assert_eq!(fedarch(&["catalog", "validate", "/definitely/missing.json"]).status.code(), Some(3));
    assert_eq!(fedarch(&["catalog", "frobnicate"]).status.code(), Some(2));
}

#[test]
fn catalog_environment_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write(dir.path(), "garbage.json", "[]");
    let o = Command::new(env!("CARGO_BIN_EXE_fedarch"))
        .args(["catalog", "validate"])
        .env("FEDARCH_CATALOG", &garbage)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn decide_with_an_empty_profile_selects_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "empty.json", "{}");
    let adr = dir.path().join("adr.md");
    let o = fedarch(&["decide", "--profile", &profile, "--adr", adr.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for m in rec["models"].as_array().unwrap() {
        assert_eq!(m["best"]["chosen"].as_array().unwrap().len(), 0);
    }
    assert!(std::fs::read_to_string(adr).unwrap().starts_with("# "));

    let bad = write(dir.path(), "bad.json", r#"{"weights":{"speed":1}}"#);
    assert_eq!(fedarch(&["decide", "--profile", &bad]).status.code(), Some(1));
}

#[test]
fn whatif_flags_build_the_delta() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "p.json", r#"{"weights":{"communication_efficiency":1}}"#);
    let o = fedarch(&["whatif", "--profile", &profile, "--force-out", "message_compressor", "--set-weight", "model_quality=0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["after"]["profile"]["forced_out"][0], "message_compressor");
    let o = fedarch(&["whatif", "--profile", &profile, "--force-in", "x", "--force-out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn case_study_prints_the_mapping() {
    let o = fedarch(&["case-study", "meta"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().skip(1).filter(|l| !l.contains("note:")).map(|l| l.trim().to_string()).collect();
    assert_eq!(
        lines,
        ["secure_aggregator", "training_configurator", "heterogeneous_data_handler", "client_registry", "model_co_versioning_registry"]
    );
    assert_eq!(fedarch(&["case-study", "acme"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_metrics_and_events_and_the_seed_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::baseline(1);
    cfg.rounds = 5;
    let config = write(dir.path(), "c.json", &cfg.to_json_string());
    let out = dir.path().join("m.json");
    let events = dir.path().join("e.jsonl");
    let o = fedarch(&[
        "simulate",
        "--config",
        &config,
        "--seed",
        "77",
        "--out",
        out.to_str().unwrap(),
        "--events",
        events.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    cfg.seed = 77;
    let expected = run_simulation(&cfg).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap().trim_end(), expected.to_json_string());
    assert_eq!(std::fs::read_to_string(events).unwrap().lines().count() as u64, expected.event_count);

    let bad = write(dir.path(), "bad.json", r#"{"n_clients": 3}"#);
    assert_eq!(fedarch(&["simulate", "--config", &bad]).status.code(), Some(3));
}

#[test]
fn validate_all_runs_a_subset_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let md = dir.path().join("r.md");
    let o = fedarch(&["validate-all", "--only", "H1", "--only", "H5", "--report", md.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("H5 pass"));
    let report = std::fs::read_to_string(md).unwrap();
    assert!(report.contains("## Edge coverage"));

    let json = dir.path().join("r.json");
    assert_eq!(fedarch(&["validate-all", "--only", "H9", "--report", json.to_str().unwrap()]).status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(parsed["summary"]["total_edges"], 58);
    assert_eq!(fedarch(&["validate-all", "--only", "H42"]).status.code(), Some(2));
}
