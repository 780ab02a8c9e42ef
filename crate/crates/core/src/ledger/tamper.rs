//! Post-hoc corruption of a stored ledger, for exercising tamper evidence.

use std::str::FromStr;

use super::{Ledger, LedgerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TamperMode {
    /// Flip the low bit of one payload byte.
    FlipByte,
    /// Delete the entry.
    DropEntry,
    /// Swap the entry with its successor (or predecessor, for the last one).
    Reorder,
}

impl TamperMode {
    pub const ALL: [TamperMode; 3] = [TamperMode::FlipByte, TamperMode::DropEntry, TamperMode::Reorder];

    pub fn as_str(self) -> &'static str {
        match self {
            TamperMode::FlipByte => "flip-byte",
            TamperMode::DropEntry => "drop-entry",
            TamperMode::Reorder => "reorder",
        }
    }
}

impl FromStr for TamperMode {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TamperMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| LedgerError::Encoding(format!("unknown tamper mode {s:?}")))
    }
}

/// Corrupts entry `index` in place. Flipped bytes are chosen among ASCII
/// alphanumerics so the stored file still parses.
pub fn tamper(ledger: &mut Ledger, index: usize, mode: TamperMode) -> Result<(), LedgerError> {
    let entries = ledger.entries_mut_unchecked();
    if index >= entries.len() {
        return Err(LedgerError::Encoding(format!(
            "entry {index} out of range (ledger has {})",
            entries.len()
        )));
    }
    match mode {
        TamperMode::FlipByte => {
            let payload = &mut entries[index].payload;
            let candidates: Vec<usize> = (0..payload.len())
                .filter(|&i| payload[i].is_ascii_alphanumeric() && (payload[i] ^ 1).is_ascii_alphanumeric())
                .collect();
            let i = *candidates
                .get(candidates.len() / 2)
                .ok_or_else(|| LedgerError::Encoding(format!("entry {index} has no flippable payload byte")))?;
            payload[i] ^= 1;
        }
        TamperMode::DropEntry => {
            entries.remove(index);
        }
        TamperMode::Reorder => {
            if entries.len() < 2 {
                return Err(LedgerError::Encoding("reorder needs at least two entries".into()));
            }
            let other = if index + 1 < entries.len() { index + 1 } else { index - 1 };
            entries.swap(index, other);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::ledger::{generate_keypair, ClaimKind};

    fn small_ledger() -> Ledger {
        let mut ledger = Ledger::new(generate_keypair(99));
        let kp = generate_keypair(1);
        let owner = ledger.register("owner", &kp.public_key()).unwrap();
        for round in 0..4 {
            ledger
                .append_claim(&owner, &kp, ClaimKind::MetricsClaim, &json!({"round": round, "acc": 0.5}))
                .unwrap();
        }
        ledger
    }

    #[test]
    fn every_mode_breaks_integrity_and_stays_parseable() {
        for mode in TamperMode::ALL {
            for i in 0..4 {
                let mut ledger = small_ledger();
                tamper(&mut ledger, i, mode).unwrap();
                assert!(!ledger.verify_integrity().ok, "{mode:?} at {i}");
                let text = String::from_utf8(ledger.to_jsonl()).unwrap();
                let reparsed = Ledger::parse_jsonl(&text).unwrap();
                assert_eq!(reparsed.as_slice(), ledger.entries());
            }
        }
    }

    #[test]
    fn out_of_range_and_names() {
        let mut ledger = small_ledger();
        assert!(tamper(&mut ledger, 4, TamperMode::DropEntry).is_err());
        assert_eq!("reorder".parse::<TamperMode>().unwrap(), TamperMode::Reorder);
        assert!("shuffle".parse::<TamperMode>().is_err());
    }
}
