//! Phase-by-phase orchestration: replay, augmentation, training,
//! evaluation and exemplar selection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classifier::{evaluate, train_phase, ClassifierState, EvalError, TrainError};
use super::config::{ConfigError, ExperimentConfig};
use super::dataset::{Dataset, Sample};
use super::features::{featurize, FEATURE_DIM};
use super::plan::PhasePlan;
use super::sampling::{epoch_view, ReplayItem};
use super::{derive_rng, derive_seed64};
use crate::memory::{
    allocate, herding_order, select_exemplars, ClassMemory, ExemplarStore, FeatureVector,
    HerdingError, LedgerError, MemoryLedger, RealExemplar, StoreError,
};
use crate::prompts::{
    avg_area_ratio, capacity_per_unit, extract_visual_prompt, GammaPolicy, PromptRecord,
};
use crate::regen::{RegenError, Regenerator};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("plan does not match the dataset: {0}")]
    Plan(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("phase {phase}: generation failed: {source}")]
    Regen { phase: usize, source: RegenError },
    #[error("phase {phase}: training failed: {source}")]
    Train { phase: usize, source: TrainError },
    #[error("phase {phase}: evaluation failed: {source}")]
    Eval { phase: usize, source: EvalError },
    #[error("phase {phase}: exemplar selection failed: {source}")]
    Herding { phase: usize, source: HerdingError },
    #[error("phase {phase}: store error: {source}")]
    Store { phase: usize, source: StoreError },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_phase: Vec<f64>,
    pub average: f64,
    pub last: f64,
}

impl Metrics {
    pub fn from_per_phase(per_phase: Vec<f64>) -> Self {
        let average = per_phase.iter().sum::<f64>() / per_phase.len() as f64;
        let last = *per_phase.last().expect("at least one phase");
        Self {
            per_phase,
            average,
            last,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: usize,
    pub new_classes: Vec<u32>,
    pub seen_classes: usize,
    pub accuracy: f64,
    /// Accuracy on classes from earlier phases, if any.
    pub old_accuracy: Option<f64>,
    pub new_accuracy: f64,
    /// Training stream length per epoch.
    pub stream_len: usize,
    /// Replay exemplars available during this phase.
    pub replay_real: usize,
    pub replay_prompts: usize,
    pub final_loss: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub metrics: Metrics,
    pub phases: Vec<PhaseReport>,
    pub ledger: MemoryLedger,
    pub store: ExemplarStore,
    pub classifier: ClassifierState,
}

/// Everything needed to diff two runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub plan: PhasePlan,
    pub ledger: MemoryLedger,
    pub metrics: Metrics,
    pub phases: Vec<PhaseReport>,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig, plan: &PhasePlan, outcome: &ExperimentOutcome) -> Self {
        Self {
            config: config.clone(),
            plan: plan.clone(),
            ledger: outcome.ledger,
            metrics: outcome.metrics.clone(),
            phases: outcome.phases.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `phase,classes,accuracy` rows, one per phase.
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("phase,seen_classes,accuracy,old_accuracy,new_accuracy\n");
        for p in &self.phases {
            let old = p.old_accuracy.map_or(String::new(), |a| format!("{a:.6}"));
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{:.6}",
                p.phase, p.seen_classes, p.accuracy, old, p.new_accuracy
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let l = &self.ledger;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "protocol {:?} N={} C={} b={} alpha={} p={} K={} seed={}",
            c.protocol,
            c.phases,
            c.classes,
            c.units_per_class,
            c.alpha,
            c.p,
            c.copies,
            c.experiment_seed
        );
        let _ = writeln!(
            out,
            "ledger: R={} real + S={} prompts per class (capacity {:.3}/unit)",
            l.real_slots, l.synthetic_slots, l.capacity_per_unit
        );
        let _ = writeln!(
            out,
            "{:>5} {:>7} {:>8} {:>8} {:>8} {:>7}",
            "phase", "classes", "acc", "old", "new", "stream"
        );
        for p in &self.phases {
            let old = p
                .old_accuracy
                .map_or("-".to_string(), |a| format!("{:.4}", a));
            let _ = writeln!(
                out,
                "{:>5} {:>7} {:>8.4} {:>8} {:>8.4} {:>7}",
                p.phase, p.seen_classes, p.accuracy, old, p.new_accuracy, p.stream_len
            );
        }
        let _ = writeln!(
            out,
            "average {:.4}  last {:.4}",
            self.metrics.average, self.metrics.last
        );
        out
    }
}

/// Feature table for one phase; `ReplayItem`s index into it.
#[derive(Default)]
struct Pool {
    features: Vec<FeatureVector>,
}

impl Pool {
    fn push(&mut self, f: FeatureVector) -> usize {
        self.features.push(f);
        self.features.len() - 1
    }

    fn extend(&mut self, fs: Vec<FeatureVector>) -> Vec<usize> {
        fs.into_iter().map(|f| self.push(f)).collect()
    }
}

fn prompt_for(
    sample_image: &crate::imaging::RgbImage,
    source_id: &str,
    class_id: u32,
    dataset: &Dataset,
    cfg: &ExperimentConfig,
) -> PromptRecord {
    PromptRecord {
        visual: extract_visual_prompt(sample_image, cfg.gamma, cfg.scheme, cfg.canny),
        textual: dataset.labels[class_id as usize].clone(),
        class_id,
        source_id: source_id.to_string(),
    }
}

/// Generates and featurizes `K` copies for each prompt, in parallel.
fn copy_features(
    regen: &Regenerator,
    prompts: &[PromptRecord],
    copies: usize,
    base_seed: u64,
    phase: usize,
) -> Result<Vec<Vec<FeatureVector>>, ExperimentError> {
    prompts
        .par_iter()
        .map(|p| {
            regen
                .regenerate_prompt(p, copies as u32, base_seed)
                .into_iter()
                .map(|r| {
                    r.map(|img| featurize(&img))
                        .map_err(|source| ExperimentError::Regen { phase, source })
                })
                .collect()
        })
        .collect()
}

/// Edge maps per memory unit for this dataset and configuration.
pub fn dataset_capacity(cfg: &ExperimentConfig, dataset: &Dataset) -> f64 {
    cfg.capacity.unwrap_or_else(|| {
        let dims: Vec<(u32, u32)> = dataset
            .train
            .iter()
            .map(|s| (s.image.height() as u32, s.image.width() as u32))
            .collect();
        capacity_per_unit(avg_area_ratio(&dims, GammaPolicy::Fixed(cfg.gamma)))
    })
}

/// Runs every phase of `plan`. When `store_dir` is given the exemplar store
/// is written there after each phase, so an interrupted run leaves the
/// memory of all completed phases on disk.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    plan: &PhasePlan,
    dataset: &Dataset,
    regen: &Regenerator,
    store_dir: Option<&Path>,
) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let mut planned: Vec<u32> = plan.classes_per_phase.concat();
    planned.sort_unstable();
    if planned != (0..dataset.class_count() as u32).collect::<Vec<_>>() {
        return Err(ExperimentError::Plan(format!(
            "plan covers {} classes, dataset has {}",
            planned.len(),
            dataset.class_count()
        )));
    }

    let ledger = allocate(
        cfg.units_per_class,
        cfg.alpha,
        dataset_capacity(cfg, dataset),
    )?;
    let base_seed = derive_seed64(cfg.experiment_seed, "regen");
    let copies = cfg.copies;
    let mut store = ExemplarStore::new(ledger);
    let mut state = ClassifierState::new(FEATURE_DIM);
    let mut seen: Vec<u32> = Vec::new();
    let mut per_phase = Vec::with_capacity(plan.phase_count());
    let mut reports = Vec::with_capacity(plan.phase_count());

    for (phase, new_classes) in plan.classes_per_phase.iter().enumerate() {
        let p = if phase == 0 { 0.0 } else { cfg.p };
        let mut pool = Pool::default();
        let mut items: Vec<ReplayItem> = Vec::new();

        // New data D_i and, when augmenting, its generated copies.
        let new_samples: Vec<&Sample> = dataset
            .train
            .iter()
            .filter(|s| new_classes.contains(&s.class_id))
            .collect();
        let new_features: Vec<FeatureVector> = new_samples
            .par_iter()
            .map(|s| featurize(&s.image))
            .collect();
        let new_idx = pool.extend(new_features.clone());
        let new_prompts: Vec<PromptRecord> = new_samples
            .par_iter()
            .map(|s| prompt_for(&s.image, &s.source_id, s.class_id, dataset, cfg))
            .collect();
        let new_copies = if p > 0.0 {
            copy_features(regen, &new_prompts, copies, base_seed, phase)?
        } else {
            vec![Vec::new(); new_samples.len()]
        };
        for ((s, &real), cs) in new_samples.iter().zip(&new_idx).zip(new_copies) {
            items.push(ReplayItem {
                label: s.class_id,
                real: Some(real),
                copies: pool.extend(cs),
                augment: true,
            });
        }

        // Replay: real exemplars (optionally augmented) and prompt-backed ones.
        let augment_old = p > 0.0 && cfg.augment_exemplars;
        let mut replay_real = 0;
        let mut replay_prompts = 0;
        for (&class_id, mem) in store.classes() {
            let reals: Vec<FeatureVector> =
                mem.real.par_iter().map(|r| featurize(&r.image)).collect();
            let real_copies = if augment_old {
                let ps: Vec<PromptRecord> = mem
                    .real
                    .iter()
                    .map(|r| prompt_for(&r.image, &r.source_id, class_id, dataset, cfg))
                    .collect();
                copy_features(regen, &ps, copies, base_seed, phase)?
            } else {
                vec![Vec::new(); reals.len()]
            };
            for (f, cs) in reals.into_iter().zip(real_copies) {
                let real = pool.push(f);
                items.push(ReplayItem {
                    label: class_id,
                    real: Some(real),
                    copies: pool.extend(cs),
                    augment: augment_old,
                });
            }
            for cs in copy_features(regen, &mem.prompts, copies, base_seed, phase)? {
                items.push(ReplayItem {
                    label: class_id,
                    real: None,
                    copies: pool.extend(cs),
                    augment: false,
                });
            }
            replay_real += mem.real.len();
            replay_prompts += mem.prompts.len();
        }

        // Train.
        state.add_classes(new_classes);
        seen.extend(new_classes);
        let epochs = if phase == 0 {
            cfg.epochs_first
        } else {
            cfg.epochs_later
        };
        let seed = cfg.experiment_seed;
        let stats = train_phase(
            &mut state,
            &pool.features,
            epochs,
            cfg.learning_rate,
            |epoch| {
                let mut rng = derive_rng(seed, &format!("epoch/{phase}/{epoch}"));
                let stream = epoch_view(&items, p, copies, &mut rng)?;
                Ok(stream.into_iter().map(|e| (e.feature, e.label)).collect())
            },
        )
        .map_err(|source| ExperimentError::Train { phase, source })?;

        // Evaluate on every class seen so far.
        let test: Vec<&Sample> = dataset
            .test
            .iter()
            .filter(|s| seen.contains(&s.class_id))
            .collect();
        let test_features: Vec<FeatureVector> =
            test.par_iter().map(|s| featurize(&s.image)).collect();
        let accuracy_of = |keep: &dyn Fn(u32) -> bool| -> Result<Option<f64>, ExperimentError> {
            let subset: Vec<(&FeatureVector, u32)> = test
                .iter()
                .zip(&test_features)
                .filter(|(s, _)| keep(s.class_id))
                .map(|(s, f)| (f, s.class_id))
                .collect();
            if subset.is_empty() {
                return Ok(None);
            }
            evaluate(&state, &subset)
                .map(Some)
                .map_err(|source| ExperimentError::Eval { phase, source })
        };
        let accuracy = accuracy_of(&|_| true)?.ok_or(ExperimentError::Eval {
            phase,
            source: EvalError::Empty,
        })?;
        let old_accuracy = accuracy_of(&|c| !new_classes.contains(&c))?;
        let new_accuracy = accuracy_of(&|c| new_classes.contains(&c))?.unwrap_or(0.0);

        // Select and persist exemplars for the new classes.
        let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, s) in new_samples.iter().enumerate() {
            by_class.entry(s.class_id).or_default().push(i);
        }
        for (&class_id, members) in &by_class {
            let feats: Vec<FeatureVector> =
                members.iter().map(|&i| new_features[i].clone()).collect();
            let rank = herding_order(class_id, &feats)
                .map_err(|source| ExperimentError::Herding { phase, source })?;
            let sel = select_exemplars(&rank, &ledger);
            let memory = ClassMemory {
                label: dataset.labels[class_id as usize].clone(),
                real: sel
                    .real
                    .iter()
                    .map(|&j| {
                        let s = new_samples[members[j]];
                        RealExemplar {
                            source_id: s.source_id.clone(),
                            image: s.image.clone(),
                        }
                    })
                    .collect(),
                prompts: sel
                    .prompts
                    .iter()
                    .map(|&j| new_prompts[members[j]].clone())
                    .collect(),
            };
            store
                .insert_class(class_id, memory)
                .map_err(|source| ExperimentError::Store { phase, source })?;
        }
        if let Some(dir) = store_dir {
            store
                .save(dir)
                .map_err(|source| ExperimentError::Store { phase, source })?;
        }

        per_phase.push(accuracy);
        reports.push(PhaseReport {
            phase,
            new_classes: new_classes.clone(),
            seen_classes: seen.len(),
            accuracy,
            old_accuracy,
            new_accuracy,
            stream_len: items.len(),
            replay_real,
            replay_prompts,
            final_loss: stats.final_loss,
        });
    }

    Ok(ExperimentOutcome {
        metrics: Metrics::from_per_phase(per_phase),
        phases: reports,
        ledger,
        store,
        classifier: state,
    })
}
