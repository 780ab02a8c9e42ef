//! The project specification agreed by owner, aggregator and parties.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::FlError;

pub const LOCAL_ROUTINE: &str = "softmax_gd_v1";
pub const HASH_ROUTINE: &str = "sha512";
pub const MODEL_NAME: &str = "softmax-logreg";

/// A routine identifier with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutineSpec {
    pub id: String,
    #[serde(default = "empty_params")]
    pub params: Value,
}

fn empty_params() -> Value {
    Value::Object(Default::default())
}

impl RoutineSpec {
    pub fn new(id: &str) -> Self {
        RoutineSpec {
            id: id.to_owned(),
            params: empty_params(),
        }
    }

    pub fn with_params(id: &str, params: Value) -> Self {
        RoutineSpec {
            id: id.to_owned(),
            params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionAlgorithm {
    Fedavg,
    Krum,
}

impl FusionAlgorithm {
    /// Handler name recorded in `fusion_algorithm` facts.
    pub fn handler_name(self) -> &'static str {
        match self {
            FusionAlgorithm::Fedavg => "FedAvgFusionHandler",
            FusionAlgorithm::Krum => "KrumFusionHandler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub algorithm: FusionAlgorithm,
    /// Tolerated Byzantine replies (Krum only).
    #[serde(default = "default_byzantine_f")]
    pub byzantine_f: usize,
}

fn default_byzantine_f() -> usize {
    1
}

impl FusionConfig {
    pub fn fedavg() -> Self {
        FusionConfig {
            algorithm: FusionAlgorithm::Fedavg,
            byzantine_f: default_byzantine_f(),
        }
    }

    pub fn krum(byzantine_f: usize) -> Self {
        FusionConfig {
            algorithm: FusionAlgorithm::Krum,
            byzantine_f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalHyperparams {
    pub learning_rate: f64,
    pub epochs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalHyperparams {
    /// Recorded for the audit trail; the simulator has no wall clock.
    pub max_timeout_s: u64,
    pub quorum: usize,
    /// Hold-out accuracy that ends training early; `None` disables it.
    #[serde(default)]
    pub termination_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub num_features: usize,
    pub num_classes: usize,
}

/// `⟨P_re, L, F, H, K, n, η_l, η_g⟩` plus model shape, post-processing and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSpec {
    #[serde(default = "default_preprocess")]
    pub preprocess: Vec<RoutineSpec>,
    #[serde(default = "default_local_routine")]
    pub local_routine: String,
    pub fusion: FusionConfig,
    #[serde(default = "default_hash_routine")]
    pub hash_routine: String,
    #[serde(default = "default_model_name")]
    pub model_name: String,
    pub rounds: usize,
    pub num_parties: usize,
    pub local_hyperparams: LocalHyperparams,
    pub global_hyperparams: GlobalHyperparams,
    #[serde(default = "default_postprocess")]
    pub postprocess: RoutineSpec,
    pub model_shape: ModelShape,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_preprocess() -> Vec<RoutineSpec> {
    vec![RoutineSpec::new("minmax_v1")]
}

fn default_local_routine() -> String {
    LOCAL_ROUTINE.to_owned()
}

fn default_hash_routine() -> String {
    HASH_ROUTINE.to_owned()
}

fn default_model_name() -> String {
    MODEL_NAME.to_owned()
}

fn default_postprocess() -> RoutineSpec {
    RoutineSpec::new("identity_v1")
}

impl ProjectSpec {
    /// Five parties, ten rounds, learning rate 0.1, one epoch, full quorum.
    pub fn new(num_features: usize, num_classes: usize) -> Self {
        ProjectSpec {
            preprocess: default_preprocess(),
            local_routine: default_local_routine(),
            fusion: FusionConfig::fedavg(),
            hash_routine: default_hash_routine(),
            model_name: default_model_name(),
            rounds: 10,
            num_parties: 5,
            local_hyperparams: LocalHyperparams {
                learning_rate: 0.1,
                epochs: 1,
            },
            global_hyperparams: GlobalHyperparams {
                max_timeout_s: 600,
                quorum: 5,
                termination_accuracy: None,
            },
            postprocess: default_postprocess(),
            model_shape: ModelShape {
                num_features,
                num_classes,
            },
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), FlError> {
        let fail = |msg: String| Err(FlError::Config(msg));
        if self.rounds < 1 {
            return fail("rounds must be >= 1".into());
        }
        if self.num_parties < 1 {
            return fail("num_parties must be >= 1".into());
        }
        let q = self.global_hyperparams.quorum;
        if q < 1 || q > self.num_parties {
            return fail(format!("quorum {q} outside [1, {}]", self.num_parties));
        }
        let lr = self.local_hyperparams.learning_rate;
        if !(lr.is_finite() && lr > 0.0) {
            return fail(format!("learning_rate must be positive and finite, got {lr}"));
        }
        if self.local_hyperparams.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        if let Some(t) = self.global_hyperparams.termination_accuracy {
            if !(t > 0.0 && t <= 1.0) {
                return fail(format!("termination_accuracy must lie in (0, 1], got {t}"));
            }
        }
        if self.model_shape.num_features < 1 || self.model_shape.num_classes < 2 {
            return fail("model needs >= 1 feature and >= 2 classes".into());
        }
        if self.local_routine != LOCAL_ROUTINE {
            return fail(format!("unknown local routine {:?}", self.local_routine));
        }
        if self.hash_routine != HASH_ROUTINE {
            return fail(format!("unsupported hash routine {:?}", self.hash_routine));
        }
        if self.fusion.algorithm == FusionAlgorithm::Krum {
            let need = 2 * self.fusion.byzantine_f + 3;
            if q < need {
                return fail(format!("krum with f={} needs quorum >= {need}", self.fusion.byzantine_f));
            }
        }
        super::preprocess::validate_routines(&self.preprocess, self.model_shape.num_features)?;
        super::postprocess::validate(&self.postprocess)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        ProjectSpec::new(4, 8).validate().unwrap();
    }

    #[test]
    fn invariant_violations() {
        let base = ProjectSpec::new(4, 8);
        let cases: Vec<Box<dyn Fn(&mut ProjectSpec)>> = vec![
            Box::new(|s| s.rounds = 0),
            Box::new(|s| s.num_parties = 0),
            Box::new(|s| s.global_hyperparams.quorum = 6),
            Box::new(|s| s.global_hyperparams.quorum = 0),
            Box::new(|s| s.local_hyperparams.learning_rate = 0.0),
            Box::new(|s| s.local_hyperparams.epochs = 0),
            Box::new(|s| s.global_hyperparams.termination_accuracy = Some(1.5)),
            Box::new(|s| s.global_hyperparams.termination_accuracy = Some(0.0)),
            Box::new(|s| s.fusion = FusionConfig::krum(2)),
            Box::new(|s| s.preprocess = vec![RoutineSpec::new("nope")]),
            Box::new(|s| s.postprocess = RoutineSpec::new("nope")),
        ];
        for (i, mutate) in cases.iter().enumerate() {
            let mut s = base.clone();
            mutate(&mut s);
            assert!(s.validate().is_err(), "case {i} should be rejected");
        }
        let mut ok = base.clone();
        ok.global_hyperparams.termination_accuracy = Some(1.0);
        ok.fusion = FusionConfig::krum(1);
        ok.validate().unwrap();
    }

    #[test]
    fn serde_defaults() {
        let f: FusionConfig = serde_json::from_str(r#"{"algorithm":"krum"}"#).unwrap();
        assert_eq!(f, FusionConfig::krum(1));
        let r: RoutineSpec = serde_json::from_str(r#"{"id":"minmax_v1"}"#).unwrap();
        assert_eq!(r, RoutineSpec::new("minmax_v1"));
    }
}
