//! Identities, canonical encoding, signatures, the claim ledger and the
//! artifact store.

mod artifacts;
mod canonical;
mod chain;
mod crypto;
mod tamper;

pub use artifacts::ArtifactStore;
pub use canonical::{
    canonical_encode, canonical_string, encode_value, float, from_document, parse_document, to_document,
    Document,
};
pub use chain::{
    signing_input, ActorId, Checkpoint, ClaimEnvelope, ClaimFilter, ClaimKind, EntryCheck, IntegrityReport,
    Ledger, SERVICE_ACTOR,
};
pub use tamper::{tamper, TamperMode};
pub use crypto::{digest, fingerprint, generate_keypair, verify_signature, Digest, KeyPair};

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("actor {0:?} is not registered")]
    UnregisteredActor(String),
    #[error("actor {0:?} is already registered")]
    DuplicateActor(String),
    #[error("signature for claim by {0:?} does not verify under its registered key")]
    SignatureRejected(String),
    #[error("ledger was loaded read-only")]
    ReadOnly,
    #[error("artifact {0} not found")]
    MissingArtifact(Digest),
    #[error("artifact {0} content does not match its digest")]
    CorruptArtifact(Digest),
    #[error("ledger line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
