//! Fault injection for exercising the verifier.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    /// The party trains and claims its update, but the reply never reaches
    /// the aggregator.
    DropReply,
    /// The aggregator fuses an extra update it attributes to the party.
    /// Params: `offset` added to every weight of the party's genuine update
    /// (default 1.0).
    ForgeReply,
    /// The party signs a spec that differs from the owner's.
    /// Params: `max_timeout_s` (default: owner's value + 1).
    WrongSpec,
    /// The party trains with a different learning rate and claims it.
    /// Params: `learning_rate` (default: 10× the spec's).
    SkewHyperparams,
    /// The party skips pre-processing and claims an empty routine list.
    SkipPreprocess,
    /// The aggregator never queries the party.
    UnfairExclusion,
}

/// One injected fault. `round: None` means every round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub mode: FaultMode,
    pub party: Option<usize>,
    #[serde(default)]
    pub round: Option<usize>,
    #[serde(default)]
    pub params: Option<Value>,
}

impl FaultSpec {
    pub fn new(mode: FaultMode, party: usize) -> Self {
        FaultSpec {
            mode,
            party: Some(party),
            round: None,
            params: None,
        }
    }

    pub fn at_round(mut self, round: usize) -> Self {
        self.round = Some(round);
        self
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = Some(params);
        self
    }

    pub fn validate(&self, num_parties: usize, rounds: usize) -> Result<(), ProtocolError> {
        let party = self
            .party
            .ok_or_else(|| ProtocolError::Config(format!("fault {:?} needs a target party", self.mode)))?;
        if party >= num_parties {
            return Err(ProtocolError::Config(format!(
                "fault {:?} targets party {party}, federation has {num_parties}",
                self.mode
            )));
        }
        if let Some(r) = self.round {
            if r < 1 || r > rounds {
                return Err(ProtocolError::Config(format!("fault round {r} outside [1, {rounds}]")));
            }
        }
        Ok(())
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.as_ref()?.get(key)?.as_f64()
    }

    pub fn param_u64(&self, key: &str) -> Option<u64> {
        self.params.as_ref()?.get(key)?.as_u64()
    }

    fn hits(&self, mode: FaultMode, party: usize, round: Option<usize>) -> bool {
        self.mode == mode
            && self.party == Some(party)
            && match (self.round, round) {
                (Some(r), Some(t)) => r == t,
                _ => true,
            }
    }
}

/// Lookup helpers over a run's fault list.
#[derive(Debug, Clone, Default)]
pub(crate) struct FaultPlan<'a> {
    faults: &'a [FaultSpec],
}

impl<'a> FaultPlan<'a> {
    pub fn new(faults: &'a [FaultSpec]) -> Self {
        FaultPlan { faults }
    }

    /// First fault of `mode` affecting `party` in `round` (`None` = setup phase).
    pub fn find(&self, mode: FaultMode, party: usize, round: Option<usize>) -> Option<&'a FaultSpec> {
        self.faults.iter().find(|f| f.hits(mode, party, round))
    }

    pub fn forged_in(&self, round: usize) -> impl Iterator<Item = &'a FaultSpec> {
        self.faults
            .iter()
            .filter(move |f| f.mode == FaultMode::ForgeReply && f.round.is_none_or(|r| r == round))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn validation() {
        assert!(FaultSpec::new(FaultMode::DropReply, 4).validate(5, 10).is_ok());
        assert!(FaultSpec::new(FaultMode::DropReply, 5).validate(5, 10).is_err());
        assert!(FaultSpec::new(FaultMode::DropReply, 0).at_round(11).validate(5, 10).is_err());
        assert!(FaultSpec::new(FaultMode::DropReply, 0).at_round(0).validate(5, 10).is_err());
        let mut no_party = FaultSpec::new(FaultMode::WrongSpec, 0);
        no_party.party = None;
        assert!(no_party.validate(5, 10).is_err());
    }

    #[test]
    fn plan_matching() {
        let faults = vec![
            FaultSpec::new(FaultMode::DropReply, 2).at_round(3),
            FaultSpec::new(FaultMode::SkewHyperparams, 1).with_params(json!({"learning_rate": 0.5})),
        ];
        let plan = FaultPlan::new(&faults);
        assert!(plan.find(FaultMode::DropReply, 2, Some(3)).is_some());
        assert!(plan.find(FaultMode::DropReply, 2, Some(4)).is_none());
        assert!(plan.find(FaultMode::DropReply, 1, Some(3)).is_none());
        let skew = plan.find(FaultMode::SkewHyperparams, 1, Some(7)).unwrap();
        assert_eq!(skew.param_f64("learning_rate"), Some(0.5));
    }

    #[test]
    fn serde_shape() {
        let f: FaultSpec = serde_json::from_value(json!({"mode": "drop_reply", "party": 2, "round": 3})).unwrap();
        assert_eq!(f, FaultSpec::new(FaultMode::DropReply, 2).at_round(3));
    }
}
