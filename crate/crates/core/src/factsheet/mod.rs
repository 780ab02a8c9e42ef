//! The FactSheet: an auditor-facing summary of one run, built from the
//! ledger and a verification report of that same ledger.

mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use render::{render, Format};

use crate::flcore::RoundMetrics;
use crate::ledger::{fingerprint, ClaimFilter, ClaimKind, Digest, Ledger, LedgerError};
use crate::protocol::claims::{decode_claim, MetricsClaim, PostprocessClaim};
use crate::protocol::{owner_spec, StopReason};
use crate::verifier::{catalogue, Status, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum FactSheetError {
    #[error("report was produced for ledger {report}, but the ledger digest is {ledger}")]
    Mismatch { report: Digest, ledger: Digest },
    #[error("unknown format {0:?} (expected json, md or html)")]
    UnknownFormat(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactSheet {
    pub overview: Overview,
    pub checked_properties: Vec<CheckedProperty>,
    pub performance: Performance,
    pub lineage: Lineage,
    /// One row per ledger entry; evidence references point here.
    pub appendix: Vec<LedgerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overview {
    pub project: Option<ProjectOverview>,
    pub actors: Vec<ActorRow>,
    pub stop_reason: Option<StopReason>,
    pub rounds_executed: usize,
    pub final_model_digest: Option<Digest>,
    pub integrity_ok: bool,
    pub overall_ok: bool,
    /// "PASS" or "FAIL", mirroring `overall_ok`.
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectOverview {
    pub model_name: String,
    pub fusion: String,
    pub parties: usize,
    pub rounds: usize,
    pub quorum: usize,
    pub learning_rate: f64,
    pub epochs: u32,
    pub termination_accuracy: Option<f64>,
    pub preprocess: Vec<String>,
    pub postprocess: String,
    pub spec_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorRow {
    pub name: String,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckedProperty {
    pub predicate_id: String,
    pub description: String,
    pub scope: u8,
    pub status: Status,
    pub glyph: String,
    pub evidence: Vec<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub columns: Vec<String>,
    pub rows: Vec<RoundMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub ledger_head: Digest,
    pub ledger_digest: Digest,
    pub ledger_entries: usize,
    /// actor → claim kind → count.
    pub claims: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub seq: u64,
    pub actor: String,
    pub kind: String,
    pub round: Option<u64>,
    pub entry_hash: Digest,
}

pub fn glyph(status: Status) -> &'static str {
    match status {
        Status::Pass => "✓",
        Status::Fail => "✗",
        Status::Inapplicable => "–",
    }
}

fn stop_reason(ledger: &Ledger, rounds: Option<usize>, executed: usize) -> Option<StopReason> {
    if !ledger.claims_by(&ClaimFilter::kind(ClaimKind::NoQuorumClaim)).is_empty() {
        return Some(StopReason::NoQuorum);
    }
    match rounds {
        Some(k) if executed == k => Some(StopReason::CompletedK),
        Some(_) if executed > 0 => Some(StopReason::EarlyStop),
        _ => None,
    }
}

/// Builds the sheet. Claims that fail to decode (possible only on a
/// ledger that also fails integrity) are left out of the derived sections.
pub fn build_factsheet(ledger: &Ledger, report: &VerificationReport) -> Result<FactSheet, FactSheetError> {
    let head = ledger.head();
    let content = ledger.content_digest();
    if report.ledger_digest != content || report.ledger_head != head || report.ledger_entries != ledger.len() {
        return Err(FactSheetError::Mismatch {
            report: report.ledger_digest.clone(),
            ledger: content,
        });
    }

    let owner = owner_spec(ledger).ok();
    let project = owner.as_ref().map(|(_, claim)| {
        let s = &claim.spec;
        ProjectOverview {
            model_name: s.model_name.clone(),
            fusion: s.fusion.algorithm.handler_name().to_owned(),
            parties: s.num_parties,
            rounds: s.rounds,
            quorum: s.global_hyperparams.quorum,
            learning_rate: s.local_hyperparams.learning_rate,
            epochs: s.local_hyperparams.epochs,
            termination_accuracy: s.global_hyperparams.termination_accuracy,
            preprocess: s.preprocess.iter().map(|r| r.id.clone()).collect(),
            postprocess: s.postprocess.id.clone(),
            spec_digest: claim.spec_digest.clone(),
        }
    });
    let actors = ledger
        .registry()
        .iter()
        .map(|(name, pk)| ActorRow {
            name: name.clone(),
            fingerprint: fingerprint(pk),
        })
        .collect();
    let rounds_executed = ledger.claims_by(&ClaimFilter::kind(ClaimKind::FusionClaim)).len();
    let final_model_digest = ledger
        .claims_by(&ClaimFilter::kind(ClaimKind::PostprocessClaim))
        .last()
        .and_then(|e| decode_claim::<PostprocessClaim>(e).ok())
        .map(|c| c.output_digest);

    let checked_properties = catalogue()
        .iter()
        .map(|p| {
            let result = report.result(p.id);
            let status = result.map_or(Status::Inapplicable, |r| r.status);
            CheckedProperty {
                predicate_id: p.id.to_owned(),
                description: p.description.to_owned(),
                scope: p.scope,
                status,
                glyph: glyph(status).to_owned(),
                evidence: result.map(|r| r.evidence.clone()).unwrap_or_default(),
                detail: result.map(|r| r.detail.clone()).unwrap_or_default(),
            }
        })
        .collect();

    let mut rows: Vec<RoundMetrics> = ledger
        .claims_by(&ClaimFilter::kind(ClaimKind::MetricsClaim))
        .into_iter()
        .filter_map(|e| decode_claim::<MetricsClaim>(e).ok())
        .map(|c| c.metrics)
        .collect();
    rows.sort_by_key(|m| m.round);

    let mut claims: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for e in ledger.entries() {
        *claims
            .entry(e.actor.name.clone())
            .or_default()
            .entry(e.kind.as_str().to_owned())
            .or_default() += 1;
    }
    let appendix = ledger
        .entries()
        .iter()
        .map(|e| LedgerRow {
            seq: e.seq,
            actor: e.actor.name.clone(),
            kind: e.kind.as_str().to_owned(),
            round: e.round(),
            entry_hash: e.entry_hash(),
        })
        .collect();

    Ok(FactSheet {
        overview: Overview {
            stop_reason: stop_reason(ledger, project.as_ref().map(|p| p.rounds), rounds_executed),
            project,
            actors,
            rounds_executed,
            final_model_digest,
            integrity_ok: report.integrity.ok,
            overall_ok: report.overall_ok,
            verdict: if report.overall_ok { "PASS" } else { "FAIL" }.to_owned(),
        },
        checked_properties,
        performance: Performance {
            columns: RoundMetrics::COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows,
        },
        lineage: Lineage {
            ledger_head: head,
            ledger_digest: content,
            ledger_entries: ledger.len(),
            claims,
        },
        appendix,
    })
}
