//! Orchestration of the accountable FL protocol: claim payloads, fault
//! injection, the federation run and audit replay.

pub mod claims;
mod config;
mod faults;
mod replay;
mod run;
mod store;

pub use config::{DataSource, RunConfig};
pub use faults::{FaultMode, FaultSpec};
pub use replay::{owner_spec, party_replay_local, replay_fusion, ReplayReport, ReplayStatus, RoundReplay};
pub use run::{
    check_quorum, party_index, party_name, run_federation, run_summary, spec_digest, FederationRun, RunSummary, StopReason,
    AGGREGATOR, OWNER,
};
pub use store::{load_run, save_ledger, save_run, StoredRun, ARTIFACTS_DIR, LEDGER_FILE, REGISTRY_FILE, SUMMARY_FILE};

use crate::flcore::FlError;
use crate::ledger::LedgerError;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Convenience: materialize a config's data and run it.
pub fn run_config(config: &RunConfig) -> Result<FederationRun, ProtocolError> {
    config.spec.validate()?;
    let (parties, holdout) = config.materialize()?;
    run_federation(&config.spec, &parties, &holdout, &config.faults)
}
