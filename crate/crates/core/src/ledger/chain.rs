//! The append-only, hash-chained claim ledger.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::canonical::{canonical_encode, parse_document, Document};
use super::crypto::{digest, fingerprint, verify_signature, Digest, KeyPair};
use super::LedgerError;

/// Registry name of the accountability service, which seals the ledger head.
pub const SERVICE_ACTOR: &str = "service";

/// Registered identity of an actor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActorId {
    pub name: String,
    pub fingerprint: String,
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Claim kind tag carried by every envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    SpecClaim,
    ProvenanceClaim,
    PreprocessClaim,
    QuerySentClaim,
    QueryReceivedClaim,
    TrainingClaim,
    FusionClaim,
    NoQuorumClaim,
    MetricsClaim,
    PostprocessClaim,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 10] = [
        ClaimKind::SpecClaim,
        ClaimKind::ProvenanceClaim,
        ClaimKind::PreprocessClaim,
        ClaimKind::QuerySentClaim,
        ClaimKind::QueryReceivedClaim,
        ClaimKind::TrainingClaim,
        ClaimKind::FusionClaim,
        ClaimKind::NoQuorumClaim,
        ClaimKind::MetricsClaim,
        ClaimKind::PostprocessClaim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimKind::SpecClaim => "spec_claim",
            ClaimKind::ProvenanceClaim => "provenance_claim",
            ClaimKind::PreprocessClaim => "preprocess_claim",
            ClaimKind::QuerySentClaim => "query_sent_claim",
            ClaimKind::QueryReceivedClaim => "query_received_claim",
            ClaimKind::TrainingClaim => "training_claim",
            ClaimKind::FusionClaim => "fusion_claim",
            ClaimKind::NoQuorumClaim => "no_quorum_claim",
            ClaimKind::MetricsClaim => "metrics_claim",
            ClaimKind::PostprocessClaim => "postprocess_claim",
        }
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimKind {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LedgerError::Encoding(format!("unknown claim kind {s:?}")))
    }
}

/// One signed, chained ledger entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimEnvelope {
    pub seq: u64,
    pub actor: ActorId,
    pub kind: ClaimKind,
    /// Canonical encoding of the claim document.
    pub payload: Vec<u8>,
    pub prev_hash: Digest,
    pub signature: Vec<u8>,
}

/// Bytes covered by an envelope signature: `seq ∥ prev_hash ∥ kind ∥ payload`,
/// with newline separators after the three fixed-alphabet fields.
pub fn signing_input(seq: u64, prev_hash: &Digest, kind: ClaimKind, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("{seq}\n{prev_hash}\n{kind}\n").into_bytes();
    out.extend_from_slice(payload);
    out
}

impl ClaimEnvelope {
    /// Parses the payload into a document.
    pub fn payload_doc(&self) -> Result<Document, LedgerError> {
        parse_document(&self.payload)
    }

    /// Decodes the payload into a typed claim body.
    pub fn decode<T: serde::de::DeserializeOwned>(&self) -> Result<T, LedgerError> {
        serde_json::from_slice(&self.payload)
            .map_err(|e| LedgerError::Encoding(format!("entry {}: {e}", self.seq)))
    }

    /// `round` field of the payload, if any.
    pub fn round(&self) -> Option<u64> {
        self.payload_doc().ok()?.get("round")?.as_u64()
    }

    pub fn to_document(&self) -> Document {
        json!({
            "seq": self.seq,
            "actor": {"name": self.actor.name, "fingerprint": self.actor.fingerprint},
            "kind": self.kind.as_str(),
            "payload": String::from_utf8_lossy(&self.payload),
            "prev_hash": self.prev_hash.as_str(),
            "signature": hex::encode(&self.signature),
        })
    }

    pub fn from_document(doc: &Document) -> Result<Self, LedgerError> {
        let bad = |what: &str| LedgerError::Encoding(format!("envelope field {what}"));
        let field = |k: &str| doc.get(k).ok_or_else(|| bad(k));
        let str_field = |k: &str| field(k)?.as_str().ok_or_else(|| bad(k));
        let actor = field("actor")?;
        Ok(ClaimEnvelope {
            seq: field("seq")?.as_u64().ok_or_else(|| bad("seq"))?,
            actor: ActorId {
                name: actor.get("name").and_then(Value::as_str).ok_or_else(|| bad("actor.name"))?.to_owned(),
                fingerprint: actor
                    .get("fingerprint")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("actor.fingerprint"))?
                    .to_owned(),
            },
            kind: str_field("kind")?.parse()?,
            payload: str_field("payload")?.as_bytes().to_vec(),
            prev_hash: Digest::parse(str_field("prev_hash")?)?,
            signature: hex::decode(str_field("signature")?).map_err(|_| bad("signature"))?,
        })
    }

    /// Canonical single-line encoding, as stored in the ledger file.
    pub fn encode(&self) -> Vec<u8> {
        canonical_encode(&self.to_document()).expect("envelope documents hold no floats")
    }

    /// SHA-512 of the canonical envelope encoding.
    pub fn entry_hash(&self) -> Digest {
        digest(&self.encode())
    }
}

/// Signed statement by the service of the ledger length and head hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub entries: u64,
    pub head: Digest,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

fn checkpoint_message(entries: u64, head: &Digest) -> Vec<u8> {
    format!("flaudit/checkpoint/v1\n{entries}\n{head}").into_bytes()
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

/// Optional filter for [`Ledger::claims_by`].
#[derive(Debug, Clone, Default)]
pub struct ClaimFilter<'a> {
    pub actor: Option<&'a str>,
    pub kind: Option<ClaimKind>,
    pub round: Option<u64>,
}

impl<'a> ClaimFilter<'a> {
    pub fn kind(kind: ClaimKind) -> Self {
        ClaimFilter {
            kind: Some(kind),
            ..Default::default()
        }
    }

    pub fn actor(mut self, actor: &'a str) -> Self {
        self.actor = Some(actor);
        self
    }

    pub fn round(mut self, round: u64) -> Self {
        self.round = Some(round);
        self
    }

    fn matches(&self, e: &ClaimEnvelope) -> bool {
        self.actor.is_none_or(|a| e.actor.name == a)
            && self.kind.is_none_or(|k| e.kind == k)
            && self.round.is_none_or(|r| e.round() == Some(r))
    }
}

/// Per-entry integrity findings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCheck {
    pub position: usize,
    pub seq: u64,
    pub actor: String,
    pub kind: ClaimKind,
    pub signature_ok: bool,
    pub chain_ok: bool,
    pub seq_ok: bool,
}

impl EntryCheck {
    pub fn ok(&self) -> bool {
        self.signature_ok && self.chain_ok && self.seq_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub entries: Vec<EntryCheck>,
    /// Whether the sealed checkpoint matches the ledger length and head.
    pub checkpoint_ok: bool,
    /// Human-readable descriptions of every failed check.
    pub findings: Vec<String>,
    pub ok: bool,
}

impl IntegrityReport {
    /// Report for a ledger file that could not be parsed at all.
    pub fn unreadable(reason: String) -> Self {
        IntegrityReport {
            entries: Vec::new(),
            checkpoint_ok: false,
            findings: vec![reason],
            ok: false,
        }
    }

    pub fn failing_positions(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| !e.ok()).map(|e| e.position).collect()
    }
}

/// The accountability service's ledger: an actor registry plus the chain of
/// signed claim envelopes.
#[derive(Debug, Clone)]
pub struct Ledger {
    entries: Vec<ClaimEnvelope>,
    registry: BTreeMap<String, Vec<u8>>,
    checkpoint: Option<Checkpoint>,
    service: Option<KeyPair>,
}

impl Ledger {
    /// A writable ledger operated by the given service key.
    pub fn new(service: KeyPair) -> Self {
        let mut registry = BTreeMap::new();
        registry.insert(SERVICE_ACTOR.to_owned(), service.public_key().to_vec());
        let mut ledger = Ledger {
            entries: Vec::new(),
            registry,
            checkpoint: None,
            service: Some(service),
        };
        ledger.seal();
        ledger
    }

    /// A read-only ledger reassembled from persisted parts.
    pub fn from_parts(
        entries: Vec<ClaimEnvelope>,
        registry: BTreeMap<String, Vec<u8>>,
        checkpoint: Option<Checkpoint>,
    ) -> Self {
        Ledger {
            entries,
            registry,
            checkpoint,
            service: None,
        }
    }

    pub fn entries(&self) -> &[ClaimEnvelope] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn registry(&self) -> &BTreeMap<String, Vec<u8>> {
        &self.registry
    }

    pub fn checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoint.as_ref()
    }

    /// Registers an actor's public key. Names are unique.
    pub fn register(&mut self, name: &str, public_key: &[u8]) -> Result<ActorId, LedgerError> {
        if self.registry.contains_key(name) {
            return Err(LedgerError::DuplicateActor(name.to_owned()));
        }
        self.registry.insert(name.to_owned(), public_key.to_vec());
        Ok(ActorId {
            name: name.to_owned(),
            fingerprint: fingerprint(public_key),
        })
    }

    /// Looks up a registered actor.
    pub fn actor(&self, name: &str) -> Option<ActorId> {
        self.registry.get(name).map(|pk| ActorId {
            name: name.to_owned(),
            fingerprint: fingerprint(pk),
        })
    }

    /// Hash of the last entry, or the zero digest for an empty ledger.
    pub fn head(&self) -> Digest {
        self.entries.last().map_or_else(Digest::zero, ClaimEnvelope::entry_hash)
    }

    /// Signs and appends a claim on behalf of `actor`.
    ///
    /// The service re-verifies the signature against the registry before
    /// accepting the entry, so a claim signed with another actor's key is
    /// rejected and nothing is appended.
    pub fn append_claim(
        &mut self,
        actor: &ActorId,
        key: &KeyPair,
        kind: ClaimKind,
        payload_doc: &Document,
    ) -> Result<&ClaimEnvelope, LedgerError> {
        if self.service.is_none() {
            return Err(LedgerError::ReadOnly);
        }
        let registered = self
            .registry
            .get(&actor.name)
            .ok_or_else(|| LedgerError::UnregisteredActor(actor.name.clone()))?;
        if fingerprint(registered) != actor.fingerprint {
            return Err(LedgerError::UnregisteredActor(actor.name.clone()));
        }
        let payload = canonical_encode(payload_doc)?;
        let seq = self.entries.len() as u64;
        let prev_hash = self.head();
        let signature = key.sign(&signing_input(seq, &prev_hash, kind, &payload));
        if !verify_signature(registered, &signing_input(seq, &prev_hash, kind, &payload), &signature) {
            return Err(LedgerError::SignatureRejected(actor.name.clone()));
        }
        self.entries.push(ClaimEnvelope {
            seq,
            actor: actor.clone(),
            kind,
            payload,
            prev_hash,
            signature,
        });
        self.seal();
        Ok(self.entries.last().expect("just pushed"))
    }

    fn seal(&mut self) {
        if let Some(service) = &self.service {
            let entries = self.entries.len() as u64;
            let head = self.head();
            let signature = service.sign(&checkpoint_message(entries, &head));
            self.checkpoint = Some(Checkpoint {
                entries,
                head,
                signature,
            });
        }
    }

    /// Order-preserving subsequence of entries matching every set filter field.
    pub fn claims_by(&self, filter: &ClaimFilter<'_>) -> Vec<&ClaimEnvelope> {
        self.entries.iter().filter(|e| filter.matches(e)).collect()
    }

    /// Checks sequence density, the hash chain, every signature, and the
    /// sealed checkpoint.
    pub fn verify_integrity(&self) -> IntegrityReport {
        let mut findings = Vec::new();
        let mut checks = Vec::with_capacity(self.entries.len());
        let mut prev = Digest::zero();
        for (position, e) in self.entries.iter().enumerate() {
            let seq_ok = e.seq == position as u64;
            let chain_ok = e.prev_hash == prev;
            let signature_ok = match self.registry.get(&e.actor.name) {
                Some(pk) => {
                    fingerprint(pk) == e.actor.fingerprint
                        && verify_signature(pk, &signing_input(e.seq, &e.prev_hash, e.kind, &e.payload), &e.signature)
                }
                None => false,
            };
            if !seq_ok {
                findings.push(format!("position {position}: expected seq {position}, found {}", e.seq));
            }
            if !chain_ok {
                findings.push(format!("position {position} (seq {}): prev_hash does not match previous entry", e.seq));
            }
            if !signature_ok {
                findings.push(format!(
                    "position {position} (seq {}): signature by {:?} does not verify",
                    e.seq, e.actor.name
                ));
            }
            checks.push(EntryCheck {
                position,
                seq: e.seq,
                actor: e.actor.name.clone(),
                kind: e.kind,
                signature_ok,
                chain_ok,
                seq_ok,
            });
            prev = e.entry_hash();
        }
        let checkpoint_ok = match (&self.checkpoint, self.registry.get(SERVICE_ACTOR)) {
            (Some(cp), Some(pk)) => {
                let sig_ok = verify_signature(pk, &checkpoint_message(cp.entries, &cp.head), &cp.signature);
                let matches = cp.entries == self.entries.len() as u64 && cp.head == prev;
                if !sig_ok {
                    findings.push("checkpoint signature does not verify".to_owned());
                }
                if !matches {
                    findings.push(format!(
                        "checkpoint seals {} entries with head {}, ledger has {} entries with head {}",
                        cp.entries,
                        cp.head.short(16),
                        self.entries.len(),
                        prev.short(16)
                    ));
                }
                sig_ok && matches
            }
            _ => {
                findings.push("no sealed checkpoint".to_owned());
                false
            }
        };
        let ok = checkpoint_ok && checks.iter().all(EntryCheck::ok);
        IntegrityReport {
            entries: checks,
            checkpoint_ok,
            findings,
            ok,
        }
    }

    /// Ledger file body: one canonical envelope per line.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend_from_slice(&e.encode());
            out.push(b'\n');
        }
        out
    }

    /// Digest of the whole ledger file body. Unlike [`Ledger::head`], this
    /// changes when entries are reordered without touching the tail.
    pub fn content_digest(&self) -> Digest {
        digest(&self.to_jsonl())
    }

    /// Parses a ledger file body.
    pub fn parse_jsonl(text: &str) -> Result<Vec<ClaimEnvelope>, LedgerError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, line)| {
                parse_document(line.as_bytes())
                    .and_then(|d| ClaimEnvelope::from_document(&d))
                    .map_err(|e| LedgerError::Malformed {
                        line: i + 1,
                        reason: e.to_string(),
                    })
            })
            .collect()
    }

    /// Registry file document: actor name → public key hex.
    pub fn registry_document(&self) -> Document {
        Value::Object(
            self.registry
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(hex::encode(v))))
                .collect(),
        )
    }

    pub fn parse_registry(doc: &Document) -> Result<BTreeMap<String, Vec<u8>>, LedgerError> {
        let obj = doc
            .as_object()
            .ok_or_else(|| LedgerError::Encoding("registry must be an object".into()))?;
        obj.iter()
            .map(|(k, v)| {
                let bytes = v
                    .as_str()
                    .and_then(|s| hex::decode(s).ok())
                    .ok_or_else(|| LedgerError::Encoding(format!("registry key for {k:?}")))?;
                Ok((k.clone(), bytes))
            })
            .collect()
    }

    /// Mutable access for tamper simulation. Bypasses every ledger rule.
    pub fn entries_mut_unchecked(&mut self) -> &mut Vec<ClaimEnvelope> {
        &mut self.entries
    }
}
