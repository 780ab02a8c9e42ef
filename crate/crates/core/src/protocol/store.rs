//! Run directory layout: `ledger.jsonl`, `artifacts/`, `registry.json` and
//! `run_summary.json`.

use std::fs;
use std::path::Path;

use super::run::{run_summary, FederationRun, RunSummary};
use super::ProtocolError;
use crate::ledger::{encode_value, parse_document, ArtifactStore, Ledger, LedgerError};

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const ARTIFACTS_DIR: &str = "artifacts";
pub const REGISTRY_FILE: &str = "registry.json";
pub const SUMMARY_FILE: &str = "run_summary.json";

/// A run as read back from disk. The ledger is read-only.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub ledger: Ledger,
    pub artifacts: ArtifactStore,
    pub summary: RunSummary,
}

fn write_document(path: &Path, value: &impl serde::Serialize) -> Result<(), ProtocolError> {
    let mut bytes = encode_value(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(LedgerError::from)?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, ProtocolError> {
    fs::read(path).map_err(|e| ProtocolError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn save_run(run: &FederationRun, dir: &Path) -> Result<(), ProtocolError> {
    fs::create_dir_all(dir).map_err(LedgerError::from)?;
    fs::write(dir.join(LEDGER_FILE), run.ledger.to_jsonl()).map_err(LedgerError::from)?;
    run.artifacts.save_dir(&dir.join(ARTIFACTS_DIR))?;
    write_document(&dir.join(REGISTRY_FILE), &run.ledger.registry_document())?;
    write_document(&dir.join(SUMMARY_FILE), &run_summary(run))
}

/// Loads a run directory. A ledger file that no longer parses is an
/// error here; callers decide whether that counts as tampering.
pub fn load_run(dir: &Path) -> Result<StoredRun, ProtocolError> {
    let summary: RunSummary = serde_json::from_slice(&read(&dir.join(SUMMARY_FILE))?)
        .map_err(|e| ProtocolError::Config(format!("{SUMMARY_FILE}: {e}")))?;
    let registry = Ledger::parse_registry(&parse_document(&read(&dir.join(REGISTRY_FILE))?)?)?;
    let text = String::from_utf8(read(&dir.join(LEDGER_FILE))?)
        .map_err(|e| LedgerError::Malformed { line: 0, reason: e.to_string() })?;
    let entries = Ledger::parse_jsonl(&text)?;
    let artifacts = ArtifactStore::load_dir(&dir.join(ARTIFACTS_DIR))?;
    Ok(StoredRun {
        ledger: Ledger::from_parts(entries, registry, summary.ledger_checkpoint.clone()),
        artifacts,
        summary,
    })
}

/// Rewrites only the ledger file, e.g. after simulated tampering.
pub fn save_ledger(ledger: &Ledger, dir: &Path) -> Result<(), ProtocolError> {
    fs::write(dir.join(LEDGER_FILE), ledger.to_jsonl()).map_err(LedgerError::from)?;
    Ok(())
}
