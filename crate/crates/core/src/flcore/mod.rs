//! Datasets, pre-processing, local training, fusion, metrics and early
//! stopping.

mod dataset;
mod fusion;
mod metrics;
mod model;
pub mod postprocess;
pub mod preprocess;
pub mod rng;
mod spec;

pub use dataset::{class_means, dataset_digest, generate_synthetic_dataset, sample_blobs, Dataset, Provenance};
pub use fusion::{fedavg, fuse, krum_scores, krum_select, FusionOutcome};
pub use metrics::{check_early_stop, classification_metrics, evaluate, predict, RoundMetrics};
pub use model::{local_train, loss_and_gradient, ModelWeights, Query, Reply};
pub use preprocess::preprocess;
pub use spec::{
    FusionAlgorithm, FusionConfig, GlobalHyperparams, LocalHyperparams, ModelShape, ProjectSpec, RoutineSpec,
    HASH_ROUTINE, LOCAL_ROUTINE, MODEL_NAME,
};

#[derive(Debug, thiserror::Error)]
pub enum FlError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown routine {0:?}")]
    UnknownRoutine(String),
    #[error("no replies to fuse")]
    EmptyReplies,
    #[error("krum needs at least {needed} responders, got {got}")]
    InsufficientResponders { got: usize, needed: usize },
    #[error("csv: {0}")]
    Csv(String),
}
