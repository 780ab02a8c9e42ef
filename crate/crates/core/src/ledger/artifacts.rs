//! Content-addressed blob store for model, query and reply bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::crypto::{digest, Digest};
use super::LedgerError;

/// Blobs keyed by the SHA-512 of their bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArtifactStore {
    blobs: BTreeMap<Digest, Vec<u8>>,
}

impl ArtifactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, data: &[u8]) -> Digest {
        let d = digest(data);
        self.blobs.entry(d.clone()).or_insert_with(|| data.to_vec());
        d
    }

    /// Returns the blob for `d`. A blob whose content no longer hashes to its
    /// key is reported as corrupt rather than returned.
    pub fn get(&self, d: &Digest) -> Result<&[u8], LedgerError> {
        let blob = self
            .blobs
            .get(d)
            .ok_or_else(|| LedgerError::MissingArtifact(d.clone()))?;
        if digest(blob) != *d {
            return Err(LedgerError::CorruptArtifact(d.clone()));
        }
        Ok(blob)
    }

    pub fn contains(&self, d: &Digest) -> bool {
        self.blobs.contains_key(d)
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }

    pub fn digests(&self) -> impl Iterator<Item = &Digest> {
        self.blobs.keys()
    }

    /// Overwrites the bytes stored under `d` without rehashing (tamper simulation).
    pub fn replace_unchecked(&mut self, d: &Digest, data: Vec<u8>) {
        self.blobs.insert(d.clone(), data);
    }

    pub fn remove(&mut self, d: &Digest) -> Option<Vec<u8>> {
        self.blobs.remove(d)
    }

    /// Writes every blob as `<dir>/<digest>`.
    pub fn save_dir(&self, dir: &Path) -> Result<(), LedgerError> {
        fs::create_dir_all(dir)?;
        for (d, blob) in &self.blobs {
            fs::write(dir.join(d.as_str()), blob)?;
        }
        Ok(())
    }

    /// Loads a directory written by [`save_dir`](Self::save_dir). Files are
    /// keyed by name, not rehashed, so on-disk corruption surfaces on `get`.
    pub fn load_dir(dir: &Path) -> Result<Self, LedgerError> {
        let mut blobs = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Ok(d) = Digest::parse(name) else { continue };
            blobs.insert(d, fs::read(entry.path())?);
        }
        Ok(ArtifactStore { blobs })
    }
}
