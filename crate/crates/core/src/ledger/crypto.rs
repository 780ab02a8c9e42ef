//! Digests, deterministic key generation and Ed25519 signatures.

use std::fmt;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha512};

use super::LedgerError;

/// Lowercase hex SHA-512 digest (128 characters).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(String);

impl Digest {
    pub const HEX_LEN: usize = 128;

    /// The all-zero digest used as the genesis `prev_hash`.
    pub fn zero() -> Self {
        Digest("0".repeat(Self::HEX_LEN))
    }

    /// Parses a digest, requiring exactly 128 lowercase hex characters.
    pub fn parse(s: &str) -> Result<Self, LedgerError> {
        let ok = s.len() == Self::HEX_LEN
            && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if ok {
            Ok(Digest(s.to_owned()))
        } else {
            Err(LedgerError::Encoding(format!("not a SHA-512 hex digest: {s:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// First `n` hex characters, for display.
    pub fn short(&self, n: usize) -> &str {
        &self.0[..n.min(self.0.len())]
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// SHA-512 of `data`.
pub fn digest(data: &[u8]) -> Digest {
    Digest(hex::encode(Sha512::digest(data)))
}

/// An Ed25519 key pair. Signing is deterministic (RFC 8032).
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public_key", &hex::encode(self.public_key()))
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn private_key(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        self.signing.sign(message).to_bytes().to_vec()
    }
}

/// Derives a key pair from a 64-bit seed: the secret scalar seed is the first
/// 32 bytes of SHA-512 over a domain tag and the little-endian seed.
pub fn generate_keypair(seed: u64) -> KeyPair {
    let mut h = Sha512::new();
    h.update(b"flaudit/keygen/v1");
    h.update(seed.to_le_bytes());
    let out = h.finalize();
    let mut secret = [0u8; 32];
    secret.copy_from_slice(&out[..32]);
    KeyPair {
        signing: SigningKey::from_bytes(&secret),
    }
}

/// Verifies `signature` over `message` under a raw 32-byte public key.
pub fn verify_signature(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
    let Ok(pk) = <[u8; 32]>::try_from(public_key) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
        return false;
    };
    let Ok(sig) = Signature::from_slice(signature) else {
        return false;
    };
    vk.verify(message, &sig).is_ok()
}

/// Actor fingerprint: first 16 hex chars of SHA-512 over the public key.
pub fn fingerprint(public_key: &[u8]) -> String {
    digest(public_key).short(16).to_owned()
}
