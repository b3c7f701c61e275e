//! Desk-scale class-incremental experiment runner.
//!
//! Every random choice in a run is drawn from a generator derived from the
//! experiment seed and a purpose label (see [`derive_rng`]), so a run is a
//! pure function of its configuration.

mod classifier;
mod config;
mod dataset;
mod experiment;
mod features;
mod plan;
mod sampling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use classifier::{
    evaluate, lr_factor, train_phase, ClassifierState, EvalError, TrainError, TrainStats,
    BATCH_SIZE,
};
pub use config::{BackendConfig, ConfigError, ExperimentConfig};
pub use dataset::{polygon_vertices, procedural_dataset, sides_for_class, Dataset, Sample};
pub use experiment::{
    dataset_capacity, run_experiment, ExperimentError, ExperimentOutcome, ExperimentReport,
    Metrics, PhaseReport,
};
pub use features::{featurize, FEATURE_DIM, FEATURE_SIDE};
pub use plan::{make_phase_plan, PhasePlan, PlanError, Protocol};
pub use sampling::{epoch_view, Origin, ReplayItem, SamplingError, StreamEntry};

/// Generator for one purpose within a run: ChaCha8 keyed by
/// `sha256("edgemem-rng" || seed_le || label)`.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"edgemem-rng\0");
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// A 64-bit seed derived the same way, for APIs that take a plain seed.
pub fn derive_seed64(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"edgemem-seed\0");
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}
