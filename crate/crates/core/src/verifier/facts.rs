//! Relational facts extracted from ledger claims, with a small
//! pattern-matching query interface.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::VerifyError;
use crate::ledger::{to_document, ActorId, ClaimEnvelope, ClaimKind, Ledger};
use crate::protocol::claims::*;

/// One attested relation instance, tied to the claim it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub attestor: ActorId,
    pub relation: String,
    pub args: Vec<Value>,
    pub source_seq: u64,
}

impl Fact {
    pub fn arg_u64(&self, i: usize) -> Option<u64> {
        self.args.get(i)?.as_u64()
    }

    pub fn arg_str(&self, i: usize) -> Option<&str> {
        self.args.get(i)?.as_str()
    }
}

/// Query pattern element.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Any,
    Const(Value),
}

impl Term {
    pub fn val(v: impl Into<Value>) -> Self {
        Term::Const(v.into())
    }
}

/// Facts indexed by relation name.
#[derive(Debug, Clone, Default)]
pub struct FactBase {
    facts: Vec<Fact>,
    by_relation: BTreeMap<String, Vec<usize>>,
}

impl FactBase {
    pub fn insert(&mut self, fact: Fact) {
        self.by_relation
            .entry(fact.relation.clone())
            .or_default()
            .push(self.facts.len());
        self.facts.push(fact);
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    /// All facts of `relation`, in ledger order.
    pub fn relation(&self, relation: &str) -> impl Iterator<Item = &Fact> {
        self.by_relation
            .get(relation)
            .into_iter()
            .flatten()
            .map(|&i| &self.facts[i])
    }

    /// Facts of `relation` whose constant positions match `pattern` (same
    /// arity) and, when given, whose attestor has the given name.
    pub fn query(&self, relation: &str, pattern: &[Term], attestor: Option<&str>) -> Vec<&Fact> {
        self.relation(relation)
            .filter(|f| attestor.is_none_or(|a| f.attestor.name == a))
            .filter(|f| {
                f.args.len() == pattern.len()
                    && f.args.iter().zip(pattern).all(|(a, p)| match p {
                        Term::Any => true,
                        Term::Const(c) => a == c,
                    })
            })
            .collect()
    }
}

struct Emitter<'a> {
    fb: &'a mut FactBase,
    env: &'a ClaimEnvelope,
}

impl Emitter<'_> {
    fn emit(&mut self, relation: &str, args: Vec<Value>) {
        self.fb.insert(Fact {
            attestor: self.env.actor.clone(),
            relation: relation.to_owned(),
            args,
            source_seq: self.env.seq,
        });
    }
}

fn doc<T: Serialize>(v: &T) -> Result<Value, VerifyError> {
    Ok(to_document(v)?)
}

fn extract_one(fb: &mut FactBase, env: &ClaimEnvelope) -> Result<(), VerifyError> {
    let mut out = Emitter { fb, env };
    match env.kind {
        ClaimKind::SpecClaim => {
            let c: SpecClaim = decode_claim(env)?;
            let s = &c.spec;
            out.emit("fusion_algorithm", vec![json!(s.fusion.algorithm.handler_name())]);
            out.emit("model_name", vec![json!(s.model_name)]);
            out.emit("max_timeout", vec![json!(s.global_hyperparams.max_timeout_s)]);
            out.emit("parties", vec![json!(s.num_parties)]);
            out.emit("rounds", vec![json!(s.rounds)]);
            out.emit("quorum", vec![json!(s.global_hyperparams.quorum)]);
            out.emit("termination_accuracy", vec![doc(&s.global_hyperparams.termination_accuracy)?]);
            out.emit("learning_rate", vec![doc(&s.local_hyperparams.learning_rate)?]);
            out.emit("epochs", vec![json!(s.local_hyperparams.epochs)]);
            out.emit("preprocess_spec", vec![doc(&s.preprocess)?]);
            out.emit("postprocess_spec", vec![doc(&s.postprocess)?]);
            out.emit("spec_digest", vec![json!(c.spec_digest)]);
            out.emit("spec_document_digest", vec![json!(crate::protocol::spec_digest(s)?)]);
        }
        ClaimKind::ProvenanceClaim => {
            let c: ProvenanceClaim = decode_claim(env)?;
            out.emit("training_data_size", vec![json!(c.provenance.size)]);
            out.emit("data_digest", vec![json!(c.data_digest)]);
        }
        ClaimKind::PreprocessClaim => {
            let c: PreprocessClaim = decode_claim(env)?;
            out.emit("data_handler", vec![doc(&c.routines)?]);
            out.emit("preprocess_input", vec![json!(c.input_digest)]);
            out.emit("preprocess_output", vec![json!(c.output_digest)]);
            if env.actor.name == crate::protocol::AGGREGATOR {
                out.emit("test_data_size", vec![json!(c.size)]);
            }
        }
        ClaimKind::QuerySentClaim => {
            let c: QuerySentClaim = decode_claim(env)?;
            out.emit("sent_query", vec![json!(c.round), json!(c.party), json!(c.query_digest)]);
        }
        ClaimKind::QueryReceivedClaim => {
            let c: QueryReceivedClaim = decode_claim(env)?;
            out.emit("received_query", vec![json!(c.round), json!(c.party), json!(c.query_digest)]);
        }
        ClaimKind::TrainingClaim => {
            let c: TrainingClaim = decode_claim(env)?;
            out.emit("sent_update", vec![json!(c.round), json!(c.party), json!(c.reply_digest)]);
            out.emit("used_hyperparams", vec![json!(c.round), json!(c.party), doc(&c.hyperparams)?]);
            out.emit("training_data", vec![json!(c.round), json!(c.party), json!(c.data_digest)]);
        }
        ClaimKind::FusionClaim => {
            let c: FusionClaim = decode_claim(env)?;
            for (p, d) in c.responders.iter().zip(&c.reply_digests) {
                out.emit("used_update", vec![json!(c.round), json!(p), json!(d)]);
            }
            out.emit("fusion_input", vec![json!(c.round), json!(c.input_model_digest)]);
            out.emit("sent_global_model", vec![json!(c.round), json!(c.output_model_digest)]);
            if let Some(i) = c.selected_index {
                out.emit("selected_model_update", vec![json!(c.round), json!(i)]);
            }
        }
        ClaimKind::NoQuorumClaim => {
            let c: NoQuorumClaim = decode_claim(env)?;
            out.emit("no_quorum", vec![json!(c.round), json!(c.responders)]);
        }
        ClaimKind::MetricsClaim => {
            let c: MetricsClaim = decode_claim(env)?;
            out.emit("evaluation_results", vec![json!(c.round), doc(&c.metrics)?]);
        }
        ClaimKind::PostprocessClaim => {
            let c: PostprocessClaim = decode_claim(env)?;
            out.emit(
                "postprocess",
                vec![json!({"id": c.routine_id, "params": c.params}), json!(c.output_digest)],
            );
        }
    }
    Ok(())
}

/// Extracts facts from every claim. Refuses ledgers that fail integrity
/// checks.
pub fn extract_facts(ledger: &Ledger) -> Result<FactBase, VerifyError> {
    let integrity = ledger.verify_integrity();
    if !integrity.ok {
        return Err(VerifyError::Tampered(Box::new(integrity)));
    }
    let mut fb = FactBase::default();
    for env in ledger.entries() {
        extract_one(&mut fb, env)?;
    }
    Ok(fb)
}
