//! Typed claim payloads, one per [`ClaimKind`].

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::flcore::{LocalHyperparams, ProjectSpec, Provenance, RoundMetrics, RoutineSpec};
use crate::ledger::{ClaimKind, Digest};

/// A claim document with a fixed kind tag.
pub trait ClaimBody: Serialize + DeserializeOwned {
    const KIND: ClaimKind;
}

macro_rules! claim_body {
    ($ty:ident => $kind:ident) => {
        impl ClaimBody for $ty {
            const KIND: ClaimKind = ClaimKind::$kind;
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecRole {
    Owner,
    Aggregator,
    Party,
}

/// Spec as signed by one actor; a party's spec claim is its consent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecClaim {
    pub role: SpecRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<usize>,
    pub spec_digest: Digest,
    pub spec: ProjectSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceClaim {
    pub party: usize,
    pub data_digest: Digest,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessClaim {
    pub actor: String,
    pub routines: Vec<RoutineSpec>,
    pub input_digest: Digest,
    pub output_digest: Digest,
    /// Row count of the processed data.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySentClaim {
    pub round: usize,
    pub party: usize,
    pub query_digest: Digest,
    pub model_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReceivedClaim {
    pub round: usize,
    pub party: usize,
    pub query_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingClaim {
    pub round: usize,
    pub party: usize,
    pub routine_id: String,
    pub hyperparams: LocalHyperparams,
    pub data_digest: Digest,
    pub reply_digest: Digest,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionClaim {
    pub round: usize,
    pub input_model_digest: Digest,
    /// Party index of each fused reply, aligned with `reply_digests`.
    pub responders: Vec<usize>,
    pub reply_digests: Vec<Digest>,
    pub output_model_digest: Digest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoQuorumClaim {
    pub round: usize,
    pub responders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsClaim {
    pub round: usize,
    pub metrics: RoundMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessClaim {
    pub routine_id: String,
    pub params: Value,
    pub input_digest: Digest,
    pub output_digest: Digest,
}

claim_body!(SpecClaim => SpecClaim);
claim_body!(ProvenanceClaim => ProvenanceClaim);
claim_body!(PreprocessClaim => PreprocessClaim);
claim_body!(QuerySentClaim => QuerySentClaim);
claim_body!(QueryReceivedClaim => QueryReceivedClaim);
claim_body!(TrainingClaim => TrainingClaim);
claim_body!(FusionClaim => FusionClaim);
claim_body!(NoQuorumClaim => NoQuorumClaim);
claim_body!(MetricsClaim => MetricsClaim);
claim_body!(PostprocessClaim => PostprocessClaim);

/// Decodes an envelope into the claim type matching its kind.
pub fn decode_claim<T: ClaimBody>(env: &crate::ledger::ClaimEnvelope) -> Result<T, crate::ledger::LedgerError> {
    if env.kind != T::KIND {
        return Err(crate::ledger::LedgerError::Encoding(format!(
            "entry {} is a {}, expected {}",
            env.seq,
            env.kind,
            T::KIND
        )));
    }
    env.decode()
}
