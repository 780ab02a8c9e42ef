//! Audit replay: recompute recorded fusion steps, or a party's local
//! training, from claimed inputs and compare digests.

use serde::{Deserialize, Serialize};

use super::claims::*;
use super::run::party_name;
use super::ProtocolError;
use crate::flcore::{dataset_digest, fuse, local_train, preprocess, Dataset, ProjectSpec, Query, Reply};
use crate::ledger::{digest, encode_value, ArtifactStore, ClaimFilter, ClaimKind, Digest, Ledger, LedgerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayStatus {
    Match,
    Mismatch,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReplay {
    pub round: usize,
    /// Sequence number of the claim being replayed.
    pub seq: u64,
    pub status: ReplayStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rounds: Vec<RoundReplay>,
    /// Set when replay could not start (e.g. dataset digest mismatch).
    pub preflight: Option<String>,
}

impl ReplayReport {
    /// All replayed rounds match and nothing blocked the replay. Vacuously
    /// true when there was nothing to replay.
    pub fn ok(&self) -> bool {
        self.preflight.is_none() && self.rounds.iter().all(|r| r.status == ReplayStatus::Match)
    }

    fn blocked(reason: String) -> Self {
        ReplayReport {
            rounds: Vec::new(),
            preflight: Some(reason),
        }
    }
}

/// The owner's signed spec, which the verifier treats as the reference.
pub fn owner_spec(ledger: &Ledger) -> Result<(u64, SpecClaim), ProtocolError> {
    let env = ledger
        .claims_by(&ClaimFilter::kind(ClaimKind::SpecClaim).actor(super::run::OWNER))
        .into_iter()
        .next()
        .ok_or_else(|| ProtocolError::Config("ledger has no owner spec claim".into()))?;
    Ok((env.seq, decode_claim(env)?))
}

fn fetch<T: serde::de::DeserializeOwned>(artifacts: &ArtifactStore, d: &Digest) -> Result<T, (ReplayStatus, String)> {
    match artifacts.get(d) {
        Ok(bytes) => serde_json::from_slice(bytes)
            .map_err(|e| (ReplayStatus::Mismatch, format!("artifact {} does not decode: {e}", d.short(16)))),
        Err(LedgerError::MissingArtifact(_)) => {
            Err((ReplayStatus::Unverifiable, format!("artifact {} is missing", d.short(16))))
        }
        Err(e) => Err((ReplayStatus::Mismatch, e.to_string())),
    }
}

fn model_digest<T: Serialize>(value: &T) -> Result<Digest, (ReplayStatus, String)> {
    encode_value(value)
        .map(|b| digest(&b))
        .map_err(|e| (ReplayStatus::Mismatch, e.to_string()))
}

fn replay_one_fusion(spec: &ProjectSpec, claim: &FusionClaim, artifacts: &ArtifactStore) -> Result<String, (ReplayStatus, String)> {
    if claim.responders.len() != claim.reply_digests.len() {
        return Err((ReplayStatus::Mismatch, "responders and reply digests are misaligned".into()));
    }
    let mut replies = Vec::with_capacity(claim.reply_digests.len());
    for (party, d) in claim.responders.iter().zip(&claim.reply_digests) {
        let reply: Reply = fetch(artifacts, d)?;
        if reply.party != *party || reply.round != claim.round {
            return Err((
                ReplayStatus::Mismatch,
                format!("reply {} is for round {} party {}", d.short(16), reply.round, reply.party),
            ));
        }
        replies.push(reply);
    }
    let outcome = fuse(&spec.fusion, &replies).map_err(|e| (ReplayStatus::Mismatch, e.to_string()))?;
    let recomputed = model_digest(&outcome.model)?;
    if recomputed != claim.output_model_digest {
        return Err((
            ReplayStatus::Mismatch,
            format!(
                "recomputed output {} differs from claimed {}",
                recomputed.short(16),
                claim.output_model_digest.short(16)
            ),
        ));
    }
    if outcome.selected_index != claim.selected_index {
        return Err((
            ReplayStatus::Mismatch,
            format!("recomputed selection {:?}, claimed {:?}", outcome.selected_index, claim.selected_index),
        ));
    }
    Ok(format!("output {} reproduced", recomputed.short(16)))
}

/// Recomputes every recorded fusion step with the owner's fusion config.
pub fn replay_fusion(ledger: &Ledger, artifacts: &ArtifactStore) -> Result<ReplayReport, ProtocolError> {
    let (_, owner) = owner_spec(ledger)?;
    let mut rounds = Vec::new();
    for env in ledger.claims_by(&ClaimFilter::kind(ClaimKind::FusionClaim)) {
        let claim: FusionClaim = decode_claim(env)?;
        let (status, detail) = match replay_one_fusion(&owner.spec, &claim, artifacts) {
            Ok(detail) => (ReplayStatus::Match, detail),
            Err(e) => e,
        };
        rounds.push(RoundReplay {
            round: claim.round,
            seq: env.seq,
            status,
            detail,
        });
    }
    Ok(ReplayReport { rounds, preflight: None })
}

/// Replays a party's local training from its raw dataset. Only the data
/// holder can run this, since claims carry data digests, not data.
pub fn party_replay_local(
    ledger: &Ledger,
    artifacts: &ArtifactStore,
    party: usize,
    data: &Dataset,
) -> Result<ReplayReport, ProtocolError> {
    let name = party_name(party);
    let by_party = |kind| ledger.claims_by(&ClaimFilter::kind(kind).actor(&name));

    let Some(prov_env) = by_party(ClaimKind::ProvenanceClaim).into_iter().next() else {
        return Ok(ReplayReport::blocked(format!("{name} has no provenance claim")));
    };
    let prov: ProvenanceClaim = decode_claim(prov_env)?;
    let actual = dataset_digest(data);
    if actual != prov.data_digest {
        return Ok(ReplayReport::blocked(format!(
            "dataset digest {} does not match claimed {} (seq {})",
            actual.short(16),
            prov.data_digest.short(16),
            prov_env.seq
        )));
    }
    let Some(pre_env) = by_party(ClaimKind::PreprocessClaim).into_iter().next() else {
        return Ok(ReplayReport::blocked(format!("{name} has no preprocess claim")));
    };
    let pre: PreprocessClaim = decode_claim(pre_env)?;
    let processed = match preprocess(data, &pre.routines) {
        Ok(p) => p,
        Err(e) => return Ok(ReplayReport::blocked(format!("claimed pre-processing fails: {e}"))),
    };
    if dataset_digest(&processed) != pre.output_digest {
        return Ok(ReplayReport::blocked(format!(
            "pre-processed digest does not match claimed output (seq {})",
            pre_env.seq
        )));
    }

    let received = by_party(ClaimKind::QueryReceivedClaim)
        .into_iter()
        .map(decode_claim::<QueryReceivedClaim>)
        .collect::<Result<Vec<_>, _>>()?;
    let mut rounds = Vec::new();
    for env in by_party(ClaimKind::TrainingClaim) {
        let claim: TrainingClaim = decode_claim(env)?;
        let outcome = (|| {
            let q = received
                .iter()
                .find(|q| q.round == claim.round)
                .ok_or((ReplayStatus::Unverifiable, "no query_received claim for this round".to_owned()))?;
            let query: Query = fetch(artifacts, &q.query_digest)?;
            let reply = local_train(&query, &processed).map_err(|e| (ReplayStatus::Mismatch, e.to_string()))?;
            let d = model_digest(&reply)?;
            if d == claim.reply_digest {
                Ok(format!("reply {} reproduced", d.short(16)))
            } else {
                Err((
                    ReplayStatus::Mismatch,
                    format!("recomputed reply {} differs from claimed {}", d.short(16), claim.reply_digest.short(16)),
                ))
            }
        })();
        let (status, detail) = match outcome {
            Ok(d) => (ReplayStatus::Match, d),
            Err(e) => e,
        };
        rounds.push(RoundReplay {
            round: claim.round,
            seq: env.seq,
            status,
            detail,
        });
    }
    Ok(ReplayReport { rounds, preflight: None })
}
