//! End-to-end flows through the persisted run directory.

use std::fs;
use std::path::Path;

use flaudit_core::factsheet::{build_factsheet, render, Format};
use flaudit_core::flcore::ProjectSpec;
use flaudit_core::ledger::{tamper, TamperMode};
use flaudit_core::protocol::{load_run, run_config, save_ledger, save_run, RunConfig, StopReason};
use flaudit_core::verifier::{extract_facts, verify, Term, VerifierConfig, VerifyError};

fn small_config() -> RunConfig {
    let mut spec = ProjectSpec::new(3, 4);
    spec.num_parties = 4;
    spec.rounds = 3;
    spec.global_hyperparams.quorum = 4;
    spec.master_seed = 99;
    RunConfig::synthetic(spec, 6, 8, 2.0)
}

fn factsheet_json(dir: &Path) -> Vec<u8> {
    let stored = load_run(dir).unwrap();
    let report = verify(&stored.ledger, &stored.artifacts, VerifierConfig::default()).unwrap();
    render(&build_factsheet(&stored.ledger, &report).unwrap(), Format::Json).unwrap()
}

#[test]
fn factsheet_rebuilds_identically_from_files() {
    let run = run_config(&small_config()).unwrap();
    let report = verify(&run.ledger, &run.artifacts, VerifierConfig::default()).unwrap();
    let in_memory = render(&build_factsheet(&run.ledger, &report).unwrap(), Format::Json).unwrap();

    let dir = tempfile::tempdir().unwrap();
    save_run(&run, dir.path()).unwrap();
    assert_eq!(factsheet_json(dir.path()), in_memory);
    assert_eq!(factsheet_json(dir.path()), in_memory);
}

#[test]
fn csv_parties_and_holdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    let write = |name: &str, shift: f64| {
        let mut body = String::from("x0,x1,label\n");
        for i in 0..12 {
            let class = i % 3;
            body += &format!("{},{},{}\n", class as f64 * 4.0 + shift + i as f64 * 0.01, 1.0 - class as f64, class);
        }
        fs::write(data.join(name), body).unwrap();
    };
    for (i, name) in ["p0.csv", "p1.csv", "p2.csv"].iter().enumerate() {
        write(name, i as f64 * 0.1);
    }
    write("holdout.csv", 0.05);
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{
  "spec": {
    "fusion": {"algorithm": "fedavg"},
    "rounds": 2,
    "num_parties": 3,
    "local_hyperparams": {"learning_rate": 0.5, "epochs": 2},
    "global_hyperparams": {"max_timeout_s": 60, "quorum": 3},
    "model_shape": {"num_features": 2, "num_classes": 3}
  },
  "data": {"kind": "csv", "parties": ["data/p0.csv", "data/p1.csv", "data/p2.csv"], "holdout": "data/holdout.csv"}
}"#,
    )
    .unwrap();
    let cfg = RunConfig::from_file(&config).unwrap();
    let run = run_config(&cfg).unwrap();
    assert_eq!(run.stop_reason, StopReason::CompletedK);
    let report = verify(&run.ledger, &run.artifacts, VerifierConfig::default()).unwrap();
    assert!(report.overall_ok, "{:?}", report.failing());
    let facts = extract_facts(&run.ledger).unwrap();
    assert_eq!(facts.query("training_data_size", &[Term::val(12)], None).len(), 3);
}

#[test]
fn stored_tampering_blocks_fact_extraction() {
    let run = run_config(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_run(&run, dir.path()).unwrap();
    for (i, mode) in [(0, TamperMode::FlipByte), (7, TamperMode::Reorder), (12, TamperMode::DropEntry)] {
        let mut stored = load_run(dir.path()).unwrap();
        tamper(&mut stored.ledger, i, mode).unwrap();
        save_ledger(&stored.ledger, dir.path()).unwrap();
        let reloaded = load_run(dir.path()).unwrap();
        assert!(matches!(extract_facts(&reloaded.ledger), Err(VerifyError::Tampered(_))));
        let report = verify(&reloaded.ledger, &reloaded.artifacts, VerifierConfig::default()).unwrap();
        assert!(!report.overall_ok);
        save_ledger(&run.ledger, dir.path()).unwrap();
    }
    assert!(verify(&load_run(dir.path()).unwrap().ledger, &run.artifacts, VerifierConfig::default())
        .unwrap()
        .overall_ok);
}
