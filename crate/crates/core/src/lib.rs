//! Accountable federated learning: an instrumented FL round protocol that
//! writes signed, hash-chained claims, a verifier that checks accountability
//! predicates over those claims, and FactSheet rendering.

pub mod factsheet;
pub mod flcore;
pub mod ledger;
pub mod protocol;
pub mod verifier;
