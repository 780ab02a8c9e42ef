//! Project configuration file: the spec, where the data comes from, and
//! any injected faults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::faults::FaultSpec;
use super::ProtocolError;
use crate::flcore::rng::{derive_seed, SplitMix64};
use crate::flcore::{class_means, sample_blobs, Dataset, ProjectSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Gaussian blobs. Class centres come from the master seed; party `i`
    /// samples from `derive_seed(master_seed, i)` and the hold-out from
    /// `derive_seed(master_seed, u64::MAX)`.
    Synthetic {
        per_class: usize,
        holdout_per_class: usize,
        class_sep: f64,
    },
    /// CSV files, resolved relative to the config file.
    Csv { parties: Vec<PathBuf>, holdout: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ProjectSpec,
    pub data: DataSource,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
}

impl RunConfig {
    pub fn synthetic(spec: ProjectSpec, per_class: usize, holdout_per_class: usize, class_sep: f64) -> Self {
        RunConfig {
            spec,
            data: DataSource::Synthetic {
                per_class,
                holdout_per_class,
                class_sep,
            },
            faults: Vec::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ProtocolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProtocolError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| ProtocolError::Config(format!("{}: {e}", path.display())))?;
        if let DataSource::Csv { parties, holdout } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in parties.iter_mut().chain(std::iter::once(holdout)) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Builds the party datasets and the hold-out set.
    pub fn materialize(&self) -> Result<(Vec<Dataset>, Dataset), ProtocolError> {
        let spec = &self.spec;
        match &self.data {
            DataSource::Synthetic {
                per_class,
                holdout_per_class,
                class_sep,
            } => {
                if *per_class == 0 || *holdout_per_class == 0 || !class_sep.is_finite() {
                    return Err(ProtocolError::Config(
                        "synthetic data needs positive per_class, holdout_per_class and finite class_sep".into(),
                    ));
                }
                let shape = spec.model_shape;
                let mut rng = SplitMix64::new(spec.master_seed);
                let means = class_means(&mut rng, shape.num_features, shape.num_classes, *class_sep);
                let parties = (0..spec.num_parties)
                    .map(|i| {
                        let seed = derive_seed(spec.master_seed, i as u64);
                        sample_blobs(&mut SplitMix64::new(seed), &means, *per_class, &format!("synthetic:party-{i}"))
                    })
                    .collect();
                let seed = derive_seed(spec.master_seed, u64::MAX);
                let holdout = sample_blobs(&mut SplitMix64::new(seed), &means, *holdout_per_class, "synthetic:holdout");
                Ok((parties, holdout))
            }
            DataSource::Csv { parties, holdout } => {
                let parties = parties
                    .iter()
                    .map(|p| Dataset::from_csv(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((parties, Dataset::from_csv(holdout)?))
            }
        }
    }
}
