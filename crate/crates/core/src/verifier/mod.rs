//! Claim verification: fact extraction from an intact ledger and a fixed
//! catalogue of accountability predicates evaluated over those facts.

mod facts;
mod predicates;

pub use facts::{extract_facts, Fact, FactBase, Term};
pub use predicates::{
    catalogue, evaluate_all, evaluate_predicate, predicate, verify, Predicate, Status, VerificationReport,
    VerificationResult, VerifierConfig,
};

use crate::ledger::{IntegrityReport, LedgerError};
use crate::protocol::ProtocolError;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("ledger failed integrity checks; refusing to extract facts")]
    Tampered(Box<IntegrityReport>),
    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
