//! The instrumented federation: setup, pre-processing, the round loop with
//! quorum and early stopping, and post-processing, each step logged as a
//! signed claim.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::claims::*;
use super::faults::{FaultMode, FaultPlan, FaultSpec};
use super::ProtocolError;
use crate::flcore::{
    check_early_stop, dataset_digest, evaluate, fuse, local_train, postprocess::postprocess, preprocess, Dataset,
    LocalHyperparams, ModelWeights, ProjectSpec, Query, Reply, LOCAL_ROUTINE,
};
use crate::flcore::rng::SplitMix64;
use crate::ledger::{encode_value, Checkpoint, to_document, ActorId, ArtifactStore, Digest, KeyPair, Ledger};

pub const OWNER: &str = "owner";
pub const AGGREGATOR: &str = "aggregator";

pub fn party_name(i: usize) -> String {
    format!("party-{i}")
}

/// Parses `party-<i>`.
pub fn party_index(name: &str) -> Option<usize> {
    name.strip_prefix("party-")?.parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    #[serde(rename = "completed_K")]
    CompletedK,
    EarlyStop,
    NoQuorum,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::CompletedK => "completed_K",
            StopReason::EarlyStop => "early_stop",
            StopReason::NoQuorum => "no_quorum",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a federation run leaves behind.
#[derive(Debug, Clone)]
pub struct FederationRun {
    pub spec: ProjectSpec,
    pub ledger: Ledger,
    pub artifacts: ArtifactStore,
    /// Post-processed final model; `None` when the run lost quorum.
    pub final_model: Option<ModelWeights>,
    pub stop_reason: StopReason,
    /// Rounds that reached fusion.
    pub rounds_executed: usize,
}

impl FederationRun {
    pub fn final_model_digest(&self) -> Option<Digest> {
        self.final_model
            .as_ref()
            .map(|m| crate::ledger::digest(&encode_value(m).expect("finite weights")))
    }
}

/// True iff enough distinct parties replied.
pub fn check_quorum(responders: &BTreeSet<usize>, spec: &ProjectSpec) -> bool {
    responders.len() >= spec.global_hyperparams.quorum
}

/// Digest of a spec document.
pub fn spec_digest(spec: &ProjectSpec) -> Result<Digest, ProtocolError> {
    Ok(crate::ledger::digest(&encode_value(spec)?))
}

struct Actor {
    id: ActorId,
    key: KeyPair,
}

struct Federation<'a> {
    ledger: Ledger,
    artifacts: ArtifactStore,
    owner: Actor,
    aggregator: Actor,
    parties: Vec<Actor>,
    faults: FaultPlan<'a>,
}

impl<'a> Federation<'a> {
    fn setup(spec: &'a ProjectSpec, faults: &'a [FaultSpec]) -> Result<Self, ProtocolError> {
        // Key seeds come from a dedicated stream so they never collide with data seeds.
        let mut seeds = SplitMix64::new(spec.master_seed ^ 0x6b65_7967_656e_2d76);
        let service = crate::ledger::generate_keypair(seeds.next_u64());
        let mut ledger = Ledger::new(service);
        let mut enroll = |name: &str| -> Result<Actor, ProtocolError> {
            let key = crate::ledger::generate_keypair(seeds.next_u64());
            let id = ledger.register(name, &key.public_key())?;
            Ok(Actor { id, key })
        };
        let owner = enroll(OWNER)?;
        let aggregator = enroll(AGGREGATOR)?;
        let parties = (0..spec.num_parties)
            .map(|i| enroll(&party_name(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Federation {
            ledger,
            artifacts: ArtifactStore::new(),
            owner,
            aggregator,
            parties,
            faults: FaultPlan::new(faults),
        })
    }

    fn claim<T: ClaimBody>(ledger: &mut Ledger, actor: &Actor, body: &T) -> Result<(), ProtocolError> {
        ledger.append_claim(&actor.id, &actor.key, T::KIND, &to_document(body)?)?;
        Ok(())
    }

    fn by_owner<T: ClaimBody>(&mut self, body: &T) -> Result<(), ProtocolError> {
        Self::claim(&mut self.ledger, &self.owner, body)
    }

    fn by_aggregator<T: ClaimBody>(&mut self, body: &T) -> Result<(), ProtocolError> {
        Self::claim(&mut self.ledger, &self.aggregator, body)
    }

    fn by_party<T: ClaimBody>(&mut self, i: usize, body: &T) -> Result<(), ProtocolError> {
        Self::claim(&mut self.ledger, &self.parties[i], body)
    }

    fn store<T: Serialize>(&mut self, value: &T) -> Result<Digest, ProtocolError> {
        Ok(self.artifacts.put(&encode_value(value)?))
    }
}

fn check_inputs(spec: &ProjectSpec, party_data: &[Dataset], holdout: &Dataset, faults: &[FaultSpec]) -> Result<(), ProtocolError> {
    spec.validate()?;
    if party_data.len() != spec.num_parties {
        return Err(ProtocolError::Config(format!(
            "{} party datasets for {} parties",
            party_data.len(),
            spec.num_parties
        )));
    }
    let shape = spec.model_shape;
    for (name, d) in party_data
        .iter()
        .enumerate()
        .map(|(i, d)| (party_name(i), d))
        .chain(std::iter::once(("hold-out".to_owned(), holdout)))
    {
        if d.cols() != shape.num_features {
            return Err(ProtocolError::Config(format!(
                "{name} data has {} features, spec says {}",
                d.cols(),
                shape.num_features
            )));
        }
        if d.rows() == 0 {
            return Err(ProtocolError::Config(format!("{name} data is empty")));
        }
        if d.label_span() > shape.num_classes {
            return Err(ProtocolError::Config(format!(
                "{name} data has labels beyond {} classes",
                shape.num_classes
            )));
        }
    }
    for f in faults {
        f.validate(spec.num_parties, spec.rounds)?;
    }
    Ok(())
}

/// Runs the full protocol and returns the ledger, artifacts and outcome.
///
/// Faults perturb only the targeted behaviour; every other actor keeps
/// logging its honest view.
pub fn run_federation(
    spec: &ProjectSpec,
    party_data: &[Dataset],
    holdout: &Dataset,
    faults: &[FaultSpec],
) -> Result<FederationRun, ProtocolError> {
    check_inputs(spec, party_data, holdout, faults)?;
    let n = spec.num_parties;
    let mut fed = Federation::setup(spec, faults)?;

    // Project specification.
    let digest = spec_digest(spec)?;
    fed.by_owner(&SpecClaim {
        role: SpecRole::Owner,
        party: None,
        spec_digest: digest.clone(),
        spec: spec.clone(),
    })?;
    fed.by_aggregator(&SpecClaim {
        role: SpecRole::Aggregator,
        party: None,
        spec_digest: digest.clone(),
        spec: spec.clone(),
    })?;

    // Party setup and pre-processing.
    let mut train_data = Vec::with_capacity(n);
    let mut train_digests = Vec::with_capacity(n);
    for (i, raw) in party_data.iter().enumerate() {
        let party_spec = match fed.faults.find(FaultMode::WrongSpec, i, None) {
            Some(f) => {
                let mut s = spec.clone();
                s.global_hyperparams.max_timeout_s = f
                    .param_u64("max_timeout_s")
                    .unwrap_or(spec.global_hyperparams.max_timeout_s + 1);
                s
            }
            None => spec.clone(),
        };
        fed.by_party(
            i,
            &SpecClaim {
                role: SpecRole::Party,
                party: Some(i),
                spec_digest: spec_digest(&party_spec)?,
                spec: party_spec,
            },
        )?;
        let raw_digest = dataset_digest(raw);
        fed.by_party(
            i,
            &ProvenanceClaim {
                party: i,
                data_digest: raw_digest.clone(),
                provenance: raw.provenance.clone(),
            },
        )?;
        let routines = if fed.faults.find(FaultMode::SkipPreprocess, i, None).is_some() {
            Vec::new()
        } else {
            spec.preprocess.clone()
        };
        let processed = preprocess(raw, &routines)?;
        let out_digest = dataset_digest(&processed);
        fed.by_party(
            i,
            &PreprocessClaim {
                actor: party_name(i),
                routines,
                input_digest: raw_digest,
                output_digest: out_digest.clone(),
                size: processed.rows(),
            },
        )?;
        train_data.push(processed);
        train_digests.push(out_digest);
    }
    let holdout_processed = preprocess(holdout, &spec.preprocess)?;
    fed.by_aggregator(&PreprocessClaim {
        actor: AGGREGATOR.to_owned(),
        routines: spec.preprocess.clone(),
        input_digest: dataset_digest(holdout),
        output_digest: dataset_digest(&holdout_processed),
        size: holdout_processed.rows(),
    })?;

    // Training rounds.
    let mut model = ModelWeights::zeros(spec.model_shape);
    let mut stop_reason = StopReason::CompletedK;
    let mut rounds_executed = 0;
    for t in 1..=spec.rounds {
        let model_digest = fed.store(&model)?;
        let queried: Vec<usize> = (0..n)
            .filter(|&i| fed.faults.find(FaultMode::UnfairExclusion, i, Some(t)).is_none())
            .collect();

        let mut queries = Vec::with_capacity(queried.len());
        for &i in &queried {
            let query = Query {
                round: t,
                party: i,
                model: model.clone(),
                hyperparams: spec.local_hyperparams,
            };
            let query_digest = fed.store(&query)?;
            fed.by_aggregator(&QuerySentClaim {
                round: t,
                party: i,
                query_digest: query_digest.clone(),
                model_digest: model_digest.clone(),
            })?;
            queries.push((query, query_digest));
        }
        for (query, query_digest) in &queries {
            fed.by_party(
                query.party,
                &QueryReceivedClaim {
                    round: t,
                    party: query.party,
                    query_digest: query_digest.clone(),
                },
            )?;
        }

        let mut delivered: Vec<(Reply, Digest)> = Vec::new();
        let mut trained: Vec<Reply> = Vec::new();
        for (query, _) in &queries {
            let i = query.party;
            let mut local_query = query.clone();
            if let Some(f) = fed.faults.find(FaultMode::SkewHyperparams, i, Some(t)) {
                local_query.hyperparams = LocalHyperparams {
                    learning_rate: f
                        .param_f64("learning_rate")
                        .unwrap_or(10.0 * spec.local_hyperparams.learning_rate),
                    ..local_query.hyperparams
                };
            }
            let reply = local_train(&local_query, &train_data[i])?;
            let reply_digest = fed.store(&reply)?;
            fed.by_party(
                i,
                &TrainingClaim {
                    round: t,
                    party: i,
                    routine_id: LOCAL_ROUTINE.to_owned(),
                    hyperparams: local_query.hyperparams,
                    data_digest: train_digests[i].clone(),
                    reply_digest: reply_digest.clone(),
                    sample_count: reply.sample_count,
                },
            )?;
            trained.push(reply.clone());
            if fed.faults.find(FaultMode::DropReply, i, Some(t)).is_none() {
                delivered.push((reply, reply_digest));
            }
        }

        for f in fed.faults.forged_in(t) {
            let p = f.party.expect("validated");
            let offset = f.param_f64("offset").unwrap_or(1.0);
            let base = trained.iter().find(|r| r.party == p);
            let mut forged = base.map_or_else(|| ModelWeights::zeros(spec.model_shape), |r| r.model.clone());
            forged.w.iter_mut().for_each(|w| *w += offset);
            let forged = Reply {
                round: t,
                party: p,
                model: forged,
                sample_count: base.map_or(1, |r| r.sample_count),
            };
            let d = fed.store(&forged)?;
            delivered.push((forged, d));
        }

        delivered.sort_by_key(|(r, _)| r.party);
        let responders: BTreeSet<usize> = delivered.iter().map(|(r, _)| r.party).collect();
        if !check_quorum(&responders, spec) {
            fed.by_aggregator(&NoQuorumClaim {
                round: t,
                responders: responders.into_iter().collect(),
            })?;
            stop_reason = StopReason::NoQuorum;
            break;
        }

        let replies: Vec<Reply> = delivered.iter().map(|(r, _)| r.clone()).collect();
        let outcome = fuse(&spec.fusion, &replies)?;
        let output_digest = fed.store(&outcome.model)?;
        fed.by_aggregator(&FusionClaim {
            round: t,
            input_model_digest: model_digest,
            responders: delivered.iter().map(|(r, _)| r.party).collect(),
            reply_digests: delivered.iter().map(|(_, d)| d.clone()).collect(),
            output_model_digest: output_digest,
            selected_index: outcome.selected_index,
        })?;
        model = outcome.model;
        rounds_executed = t;

        let metrics = evaluate(&model, &holdout_processed)?.with_round(t);
        fed.by_aggregator(&MetricsClaim { round: t, metrics })?;
        if check_early_stop(&metrics, spec) {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }

    let final_model = if stop_reason == StopReason::NoQuorum {
        None
    } else {
        let input_digest = fed.store(&model)?;
        let out = postprocess(&model, &spec.postprocess)?;
        let output_digest = fed.store(&out)?;
        fed.by_aggregator(&PostprocessClaim {
            routine_id: spec.postprocess.id.clone(),
            params: spec.postprocess.params.clone(),
            input_digest,
            output_digest,
        })?;
        Some(out)
    };

    Ok(FederationRun {
        spec: spec.clone(),
        ledger: fed.ledger,
        artifacts: fed.artifacts,
        final_model,
        stop_reason,
        rounds_executed,
    })
}

/// Summary written next to the ledger. Carries the service's checkpoint,
/// without which truncation of the ledger tail is undetectable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stop_reason: StopReason,
    pub rounds_executed: usize,
    pub final_model_digest: Option<Digest>,
    pub ledger_entries: usize,
    pub ledger_checkpoint: Option<Checkpoint>,
}

pub fn run_summary(run: &FederationRun) -> RunSummary {
    RunSummary {
        stop_reason: run.stop_reason,
        rounds_executed: run.rounds_executed,
        final_model_digest: run.final_model_digest(),
        ledger_entries: run.ledger.len(),
        ledger_checkpoint: run.ledger.checkpoint().cloned(),
    }
}
