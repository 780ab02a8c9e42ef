//! The predicate catalogue and report assembly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::facts::{extract_facts, FactBase, Term};
use super::VerifyError;
use crate::flcore::ProjectSpec;
use crate::ledger::{to_document, ArtifactStore, Digest, IntegrityReport, Ledger};
use crate::protocol::{owner_spec, party_name, replay_fusion, ReplayStatus, AGGREGATOR, OWNER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predicate {
    pub id: &'static str,
    pub description: &'static str,
    /// Lifecycle stage: 1 setup, 2 pre-processing, 3 training, 4 post-processing.
    pub scope: u8,
}

const CATALOGUE: [Predicate; 12] = [
    Predicate {
        id: "P-SPEC",
        description: "the owner, the aggregator and every party signed the same project specification",
        scope: 1,
    },
    Predicate {
        id: "P-PROV",
        description: "every party claimed the provenance of its data before its first training step",
        scope: 2,
    },
    Predicate {
        id: "P-PREPROC",
        description: "every party and the aggregator ran exactly the pre-processing routines of the specification",
        scope: 2,
    },
    Predicate {
        id: "P-QMATCH",
        description: "each query claimed as sent by the aggregator is the query claimed as received by the party",
        scope: 3,
    },
    Predicate {
        id: "P-INCL-SENT",
        description: "each model update that the aggregator claims to have received is claimed to have been sent by some party",
        scope: 3,
    },
    Predicate {
        id: "P-INCL-USED",
        description: "each model update a party claims to have sent in a fused round is among the updates the aggregator fused",
        scope: 3,
    },
    Predicate {
        id: "P-FAIR",
        description: "every party was included in the same number of fusion rounds",
        scope: 3,
    },
    Predicate {
        id: "P-HYP",
        description: "every party trained with the local hyperparameters of the specification",
        scope: 3,
    },
    Predicate {
        id: "P-DATA",
        description: "every party trained on the pre-processed version of the dataset it declared",
        scope: 2,
    },
    Predicate {
        id: "P-FUSE",
        description: "every recorded fusion step reproduces bit-exactly from the recorded replies",
        scope: 3,
    },
    Predicate {
        id: "P-TERM",
        description: "training ended after the specified rounds, on reaching the accuracy target, or for lack of quorum",
        scope: 3,
    },
    Predicate {
        id: "P-POST",
        description: "the final model went through the post-processing routine of the specification",
        scope: 4,
    },
];

pub fn catalogue() -> &'static [Predicate] {
    &CATALOGUE
}

pub fn predicate(id: &str) -> Option<&'static Predicate> {
    CATALOGUE.iter().find(|p| p.id == id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub predicate_id: String,
    pub status: Status,
    /// Ledger sequence numbers supporting the outcome.
    pub evidence: Vec<u64>,
    pub detail: String,
}

impl VerificationResult {
    fn pass(id: &str, evidence: impl IntoIterator<Item = u64>, detail: impl Into<String>) -> Self {
        Self::build(id, Status::Pass, evidence, detail)
    }

    fn fail(id: &str, evidence: impl IntoIterator<Item = u64>, detail: impl Into<String>) -> Self {
        Self::build(id, Status::Fail, evidence, detail)
    }

    fn inapplicable(id: &str, detail: impl Into<String>) -> Self {
        Self::build(id, Status::Inapplicable, [], detail)
    }

    fn build(id: &str, status: Status, evidence: impl IntoIterator<Item = u64>, detail: impl Into<String>) -> Self {
        let evidence: BTreeSet<u64> = evidence.into_iter().collect();
        VerificationResult {
            predicate_id: id.to_owned(),
            status,
            evidence: evidence.into_iter().collect(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ledger_head: Digest,
    /// Digest of the full ledger file the report was produced from.
    pub ledger_digest: Digest,
    pub ledger_entries: usize,
    pub integrity: IntegrityReport,
    pub results: Vec<VerificationResult>,
    pub overall_ok: bool,
}

impl VerificationReport {
    pub fn result(&self, id: &str) -> Option<&VerificationResult> {
        self.results.iter().find(|r| r.predicate_id == id)
    }

    /// Report for a ledger file that could not even be parsed.
    pub fn unreadable(reason: String) -> Self {
        VerificationReport {
            ledger_head: Digest::zero(),
            ledger_digest: Digest::zero(),
            ledger_entries: 0,
            integrity: IntegrityReport::unreadable(reason),
            results: withheld(),
            overall_ok: false,
        }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|r| r.status == Status::Fail)
            .map(|r| r.predicate_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifierConfig {
    /// Allowed spread between the most and least included party.
    pub fairness_slack: usize,
}

struct Ctx<'a> {
    fb: &'a FactBase,
    ledger: &'a Ledger,
    artifacts: &'a ArtifactStore,
    owner: Option<(u64, ProjectSpec)>,
    config: VerifierConfig,
}

fn doc<T: Serialize>(v: &T) -> Value {
    to_document(v).expect("spec values are finite")
}

/// Round number and digest-like string at the given positions.
fn key(f: &super::Fact) -> (u64, u64, String) {
    (
        f.arg_u64(0).unwrap_or(u64::MAX),
        f.arg_u64(1).unwrap_or(u64::MAX),
        f.arg_str(2).unwrap_or_default().to_owned(),
    )
}

impl Ctx<'_> {
    fn owner_missing(&self, id: &str) -> VerificationResult {
        match self.ledger.entries().first() {
            Some(e) => VerificationResult::fail(id, [e.seq], "ledger has no owner specification to check against"),
            None => VerificationResult::inapplicable(id, "ledger is empty"),
        }
    }

    fn first_seq(&self, relation: &str, attestor: &str) -> Option<u64> {
        self.fb
            .relation(relation)
            .filter(|f| f.attestor.name == attestor)
            .map(|f| f.source_seq)
            .min()
    }

    /// Sequence numbers of fusion claims, keyed by round.
    fn fusion_seqs(&self) -> BTreeMap<u64, u64> {
        self.fb
            .relation("sent_global_model")
            .filter(|f| f.attestor.name == AGGREGATOR)
            .filter_map(|f| Some((f.arg_u64(0)?, f.source_seq)))
            .collect()
    }

    fn spec(&self, id: &str) -> Result<(u64, &ProjectSpec), VerificationResult> {
        match &self.owner {
            Some((seq, spec)) => Ok((*seq, spec)),
            None => Err(self.owner_missing(id)),
        }
    }

    fn p_spec(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let reference = self
            .fb
            .query("spec_digest", &[Term::Any], Some(OWNER))
            .first()
            .and_then(|f| f.arg_str(0).map(str::to_owned));
        let mut actors = vec![OWNER.to_owned(), AGGREGATOR.to_owned()];
        actors.extend((0..spec.num_parties).map(party_name));

        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        for name in &actors {
            let claimed = self.fb.query("spec_digest", &[Term::Any], Some(name));
            if claimed.is_empty() {
                evidence.insert(oseq);
                problems.push(format!("{name} signed no specification"));
            }
            for f in claimed {
                if f.arg_str(0).map(str::to_owned) != reference {
                    evidence.extend([oseq, f.source_seq]);
                    problems.push(format!("{name} signed a different specification (seq {})", f.source_seq));
                }
            }
        }
        for f in self.fb.relation("spec_digest") {
            let recomputed = self
                .fb
                .relation("spec_document_digest")
                .find(|g| g.source_seq == f.source_seq);
            if recomputed.map(|g| &g.args) != Some(&f.args) {
                evidence.insert(f.source_seq);
                problems.push(format!("seq {} claims a digest that does not match its spec", f.source_seq));
            }
        }
        if problems.is_empty() {
            let seqs = self.fb.relation("spec_digest").map(|f| f.source_seq);
            VerificationResult::pass(id, seqs, format!("{} actors signed the owner's specification", actors.len()))
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_prov(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        let mut support = Vec::new();
        for i in 0..spec.num_parties {
            let name = party_name(i);
            let prov = self.first_seq("data_digest", &name);
            let train = self.first_seq("sent_update", &name);
            match (prov, train) {
                (None, t) => {
                    evidence.insert(t.or_else(|| self.first_seq("spec_digest", &name)).unwrap_or(oseq));
                    problems.push(format!("{name} never claimed provenance"));
                }
                (Some(p), Some(t)) if t < p => {
                    evidence.extend([p, t]);
                    problems.push(format!("{name} trained (seq {t}) before claiming provenance (seq {p})"));
                }
                (Some(p), _) => support.push(p),
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(id, support, "every party claimed provenance before training")
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_preproc(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let expected = doc(&spec.preprocess);
        let mut actors = vec![AGGREGATOR.to_owned()];
        actors.extend((0..spec.num_parties).map(party_name));
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        let mut support = vec![oseq];
        for name in &actors {
            let claimed = self.fb.query("data_handler", &[Term::Any], Some(name));
            if claimed.is_empty() {
                evidence.insert(oseq);
                problems.push(format!("{name} claimed no pre-processing"));
            }
            for f in claimed {
                if f.args[0] != expected {
                    evidence.extend([oseq, f.source_seq]);
                    problems.push(format!("{name} ran {} instead of {}", f.args[0], expected));
                } else {
                    support.push(f.source_seq);
                }
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(id, support, format!("{} actors ran {}", actors.len(), expected))
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_qmatch(&self, id: &str) -> VerificationResult {
        let sent: BTreeMap<(u64, u64), (u64, String)> = self
            .fb
            .relation("sent_query")
            .filter(|f| f.attestor.name == AGGREGATOR)
            .map(|f| {
                let (r, p, d) = key(f);
                ((r, p), (f.source_seq, d))
            })
            .collect();
        let mut received: BTreeMap<(u64, u64), (u64, String)> = BTreeMap::new();
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        for f in self.fb.relation("received_query") {
            let (r, p, d) = key(f);
            if f.attestor.name != party_name(p as usize) {
                evidence.insert(f.source_seq);
                problems.push(format!("{} claims receipt of party {p}'s query", f.attestor.name));
            }
            received.insert((r, p), (f.source_seq, d));
        }
        if sent.is_empty() && received.is_empty() {
            return VerificationResult::inapplicable(id, "no queries were recorded");
        }
        let keys: BTreeSet<_> = sent.keys().chain(received.keys()).copied().collect();
        for (r, p) in &keys {
            match (sent.get(&(*r, *p)), received.get(&(*r, *p))) {
                (Some((s, ds)), Some((q, dr))) if ds != dr => {
                    evidence.extend([*s, *q]);
                    problems.push(format!("round {r} party {p}: sent and received query digests differ"));
                }
                (Some((s, _)), None) => {
                    evidence.insert(*s);
                    problems.push(format!("round {r} party {p}: query sent but never claimed as received"));
                }
                (None, Some((q, _))) => {
                    evidence.insert(*q);
                    problems.push(format!("round {r} party {p}: query received but never claimed as sent"));
                }
                _ => {}
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(id, [], format!("{} queries match on both sides", keys.len()))
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn training_seqs(&self, round: u64) -> impl Iterator<Item = u64> + '_ {
        self.fb
            .query("sent_update", &[Term::val(round), Term::Any, Term::Any], None)
            .into_iter()
            .map(|f| f.source_seq)
    }

    fn p_incl_sent(&self, id: &str) -> VerificationResult {
        let sent: BTreeSet<(u64, String)> = self
            .fb
            .relation("sent_update")
            .map(|f| {
                let (r, _, d) = key(f);
                (r, d)
            })
            .collect();
        let used: Vec<_> = self.fb.relation("used_update").collect();
        if used.is_empty() {
            return VerificationResult::inapplicable(id, "no fusion step was recorded");
        }
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        for f in &used {
            let (r, p, d) = key(f);
            if !sent.contains(&(r, d.clone())) {
                evidence.insert(f.source_seq);
                evidence.extend(self.training_seqs(r));
                problems.push(format!(
                    "round {r}: update {} attributed to party {p} was never claimed as sent",
                    &d[..d.len().min(16)]
                ));
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(
                id,
                [],
                format!("all {} model updates received by the aggregator were also sent by a party", used.len()),
            )
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_incl_used(&self, id: &str) -> VerificationResult {
        let fused = self.fusion_seqs();
        if fused.is_empty() {
            return VerificationResult::inapplicable(id, "no fusion step was recorded");
        }
        let used: BTreeSet<(u64, u64, String)> = self.fb.relation("used_update").map(key).collect();
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        let mut checked = 0;
        for f in self.fb.relation("sent_update") {
            let k = key(f);
            let Some(&fseq) = fused.get(&k.0) else { continue };
            checked += 1;
            if !used.contains(&k) {
                evidence.extend([f.source_seq, fseq]);
                problems.push(format!("round {}: party {}'s update was not fused", k.0, k.1));
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(id, fused.values().copied(), format!("{checked} sent updates were all fused"))
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_fair(&self, id: &str) -> VerificationResult {
        let (_, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let mut rounds: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        for f in self.fb.relation("used_update") {
            let (_, p, _) = key(f);
            rounds.entry(f.source_seq).or_default().insert(p);
        }
        if rounds.is_empty() {
            return VerificationResult::inapplicable(id, "no fusion step was recorded");
        }
        let counts: Vec<usize> = (0..spec.num_parties as u64)
            .map(|p| rounds.values().filter(|s| s.contains(&p)).count())
            .collect();
        let max = counts.iter().copied().max().unwrap_or(0);
        let min = counts.iter().copied().min().unwrap_or(0);
        let summary = counts
            .iter()
            .enumerate()
            .map(|(p, c)| format!("party-{p}: {c}"))
            .collect::<Vec<_>>()
            .join(", ");
        if max - min <= self.config.fairness_slack {
            return VerificationResult::pass(id, rounds.keys().copied(), format!("inclusion counts {summary}"));
        }
        let behind: Vec<u64> = (0..spec.num_parties as u64).filter(|&p| counts[p as usize] < max).collect();
        let evidence = rounds
            .iter()
            .filter(|(_, s)| behind.iter().any(|p| !s.contains(p)))
            .map(|(&seq, _)| seq);
        VerificationResult::fail(
            id,
            evidence,
            format!("inclusion counts differ by more than {}: {summary}", self.config.fairness_slack),
        )
    }

    fn p_hyp(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let expected = doc(&spec.local_hyperparams);
        let facts: Vec<_> = self.fb.relation("used_hyperparams").collect();
        if facts.is_empty() {
            return VerificationResult::inapplicable(id, "no training step was recorded");
        }
        let bad: Vec<_> = facts.iter().filter(|f| f.args[2] != expected).collect();
        if bad.is_empty() {
            return VerificationResult::pass(id, [oseq], format!("{} training steps used {expected}", facts.len()));
        }
        let detail = bad
            .iter()
            .map(|f| format!("{} used {} in round {}", f.attestor.name, f.args[2], f.args[0]))
            .collect::<Vec<_>>()
            .join("; ");
        VerificationResult::fail(
            id,
            bad.iter().map(|f| f.source_seq).chain([oseq]),
            format!("expected {expected}; {detail}"),
        )
    }

    fn p_data(&self, id: &str) -> VerificationResult {
        let (_, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let mut evidence = BTreeSet::new();
        let mut problems = Vec::new();
        for i in 0..spec.num_parties {
            let name = party_name(i);
            let one = |rel: &str| {
                self.fb
                    .query(rel, &[Term::Any], Some(&name))
                    .first()
                    .map(|f| (f.source_seq, f.args[0].clone()))
            };
            let trained = self.fb.query("training_data", &[Term::Any, Term::Any, Term::Any], Some(&name));
            let (prov, input, output) = (one("data_digest"), one("preprocess_input"), one("preprocess_output"));
            if let (Some((ps, pd)), Some((is, id_))) = (&prov, &input) {
                if pd != id_ {
                    evidence.extend([*ps, *is]);
                    problems.push(format!("{name} pre-processed data other than the data it declared"));
                }
            }
            match output {
                Some((os, od)) => {
                    for f in trained.iter().filter(|f| f.args[2] != od) {
                        evidence.extend([os, f.source_seq]);
                        problems.push(format!("{name} trained on undeclared data in round {}", f.args[0]));
                    }
                }
                None if !trained.is_empty() => {
                    evidence.extend(trained.iter().map(|f| f.source_seq));
                    problems.push(format!("{name} trained without a pre-processing claim"));
                }
                None => {}
            }
            if input.is_none() && prov.is_some() && !trained.is_empty() {
                evidence.extend(trained.iter().map(|f| f.source_seq));
                problems.push(format!("{name} never declared its pre-processing input"));
            }
        }
        if problems.is_empty() {
            VerificationResult::pass(id, [], "training data digests agree with provenance and pre-processing claims")
        } else {
            VerificationResult::fail(id, evidence, problems.join("; "))
        }
    }

    fn p_fuse(&self, id: &str) -> VerificationResult {
        let report = match replay_fusion(self.ledger, self.artifacts) {
            Ok(r) => r,
            Err(_) => return self.owner_missing(id),
        };
        if report.rounds.is_empty() {
            return VerificationResult::inapplicable(id, "no fusion step was recorded");
        }
        let bad: Vec<_> = report.rounds.iter().filter(|r| r.status != ReplayStatus::Match).collect();
        if bad.is_empty() {
            return VerificationResult::pass(
                id,
                report.rounds.iter().map(|r| r.seq),
                format!("{} fusion steps reproduced", report.rounds.len()),
            );
        }
        let detail = bad
            .iter()
            .map(|r| format!("round {}: {}", r.round, r.detail))
            .collect::<Vec<_>>()
            .join("; ");
        VerificationResult::fail(id, bad.iter().map(|r| r.seq), detail)
    }

    fn p_term(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        if let Some(f) = self.fb.relation("no_quorum").next() {
            return VerificationResult::pass(id, [f.source_seq], format!("stopped for lack of quorum in round {}", f.args[0]));
        }
        let fused = self.fusion_seqs();
        let executed = fused.len();
        let last = fused.iter().next_back().map(|(&r, &s)| (r, s));
        if executed == spec.rounds && last.is_none_or(|(r, _)| r as usize == spec.rounds) {
            return VerificationResult::pass(id, [oseq], format!("all {executed} rounds executed"));
        }
        if let (Some(threshold), Some((round, fseq))) = (spec.global_hyperparams.termination_accuracy, last) {
            let met = self
                .fb
                .query("evaluation_results", &[Term::val(round), Term::Any], Some(AGGREGATOR))
                .into_iter()
                .find_map(|f| f.args[1].get("acc").and_then(Value::as_f64).map(|a| (f.source_seq, a)));
            if let Some((mseq, acc)) = met.filter(|&(_, a)| a >= threshold) {
                if executed < spec.rounds {
                    return VerificationResult::pass(
                        id,
                        [oseq, fseq, mseq],
                        format!("stopped early in round {round} with accuracy {acc} >= {threshold}"),
                    );
                }
            }
        }
        let evidence = last.map_or(oseq, |(_, s)| s);
        VerificationResult::fail(
            id,
            [oseq, evidence],
            format!("{executed} of {} rounds executed without a recorded reason to stop", spec.rounds),
        )
    }

    fn p_post(&self, id: &str) -> VerificationResult {
        let (oseq, spec) = match self.spec(id) {
            Ok(s) => s,
            Err(r) => return r,
        };
        let facts: Vec<_> = self.fb.relation("postprocess").collect();
        if facts.is_empty() {
            if self.fb.relation("no_quorum").next().is_some() {
                return VerificationResult::inapplicable(id, "no final model was produced");
            }
            let evidence = self.fusion_seqs().values().next_back().copied().unwrap_or(oseq);
            return VerificationResult::fail(id, [oseq, evidence], "no post-processing was claimed");
        }
        let expected = doc(&spec.postprocess);
        let bad: Vec<_> = facts
            .iter()
            .filter(|f| f.args[0] != expected || f.attestor.name != AGGREGATOR)
            .collect();
        if bad.is_empty() && facts.len() == 1 {
            return VerificationResult::pass(id, [oseq, facts[0].source_seq], format!("final model processed with {expected}"));
        }
        VerificationResult::fail(
            id,
            facts.iter().map(|f| f.source_seq).chain([oseq]),
            format!("expected one post-processing step with {expected}, found {}", facts.len()),
        )
    }
}

fn context<'a>(
    fb: &'a FactBase,
    ledger: &'a Ledger,
    artifacts: &'a ArtifactStore,
    config: VerifierConfig,
) -> Ctx<'a> {
    let owner = owner_spec(ledger).ok().map(|(seq, c)| (seq, c.spec));
    Ctx {
        fb,
        ledger,
        artifacts,
        owner,
        config,
    }
}

fn dispatch(ctx: &Ctx<'_>, id: &str) -> Result<VerificationResult, VerifyError> {
    let p = predicate(id).ok_or_else(|| VerifyError::UnknownPredicate(id.to_owned()))?;
    Ok(match p.id {
        "P-SPEC" => ctx.p_spec(p.id),
        "P-PROV" => ctx.p_prov(p.id),
        "P-PREPROC" => ctx.p_preproc(p.id),
        "P-QMATCH" => ctx.p_qmatch(p.id),
        "P-INCL-SENT" => ctx.p_incl_sent(p.id),
        "P-INCL-USED" => ctx.p_incl_used(p.id),
        "P-FAIR" => ctx.p_fair(p.id),
        "P-HYP" => ctx.p_hyp(p.id),
        "P-DATA" => ctx.p_data(p.id),
        "P-FUSE" => ctx.p_fuse(p.id),
        "P-TERM" => ctx.p_term(p.id),
        "P-POST" => ctx.p_post(p.id),
        other => unreachable!("catalogue entry {other} has no rule"),
    })
}

pub fn evaluate_predicate(
    fb: &FactBase,
    ledger: &Ledger,
    artifacts: &ArtifactStore,
    id: &str,
    config: VerifierConfig,
) -> Result<VerificationResult, VerifyError> {
    dispatch(&context(fb, ledger, artifacts, config), id)
}

/// Evaluates the whole catalogue over facts already extracted from `ledger`.
pub fn evaluate_all(fb: &FactBase, ledger: &Ledger, artifacts: &ArtifactStore, config: VerifierConfig) -> VerificationReport {
    let ctx = context(fb, ledger, artifacts, config);
    let results: Vec<_> = CATALOGUE
        .iter()
        .map(|p| dispatch(&ctx, p.id).expect("catalogue ids are known"))
        .collect();
    let integrity = ledger.verify_integrity();
    let overall_ok = integrity.ok && results.iter().all(|r| r.status != Status::Fail);
    VerificationReport {
        ledger_head: ledger.head(),
        ledger_digest: ledger.content_digest(),
        ledger_entries: ledger.len(),
        integrity,
        results,
        overall_ok,
    }
}

fn withheld() -> Vec<VerificationResult> {
    CATALOGUE
        .iter()
        .map(|p| VerificationResult::inapplicable(p.id, "withheld: ledger failed integrity checks"))
        .collect()
}

/// Integrity check, fact extraction and evaluation in one step. A ledger
/// that fails integrity gets every result withheld.
pub fn verify(ledger: &Ledger, artifacts: &ArtifactStore, config: VerifierConfig) -> Result<VerificationReport, VerifyError> {
    match extract_facts(ledger) {
        Ok(fb) => Ok(evaluate_all(&fb, ledger, artifacts, config)),
        Err(VerifyError::Tampered(integrity)) => Ok(VerificationReport {
            ledger_head: ledger.head(),
            ledger_digest: ledger.content_digest(),
            ledger_entries: ledger.len(),
            integrity: *integrity,
            results: withheld(),
            overall_ok: false,
        }),
        Err(e) => Err(e),
    }
}
