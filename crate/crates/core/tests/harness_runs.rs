mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::fs_tree::tree_bytes;
use edgemem::harness::{
    derive_rng, epoch_view, evaluate, featurize, make_phase_plan, procedural_dataset,
    run_experiment, train_phase, ClassifierState, ExperimentConfig, ExperimentError, PhasePlan,
    Protocol, ReplayItem, FEATURE_DIM,
};
use edgemem::imaging::{BitEdgeMap, RgbImage};
use edgemem::memory::ExemplarStore;
use edgemem::prompts::TextualPrompt;
use edgemem::regen::{
    BackendDescriptor, BackendError, BackendKind, GenerationBackend, GenerationCache, Regenerator,
    StubBackend,
};

const SMALL: &str = r#"
protocol = "lfh"
phases = 2
classes = 6
samples_per_class = 20
units_per_class = 2
alpha = 0.5
p = 0.3
copies = 2
epochs_first = 8
epochs_later = 8
dataset_seed = 3
experiment_seed = 4
"#;

fn small(edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml(SMALL).unwrap();
    edit(&mut c);
    c.validate().unwrap();
    c
}

fn stub_regen() -> Regenerator {
    Regenerator::new(
        Arc::new(StubBackend::default()),
        GenerationCache::in_memory(),
    )
}

fn plan_for(cfg: &ExperimentConfig) -> PhasePlan {
    make_phase_plan(cfg.classes, cfg.phases, cfg.protocol, cfg.experiment_seed).unwrap()
}

#[test]
fn identical_runs_are_byte_identical() {
    let cfg = small(|_| {});
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let plan = plan_for(&cfg);
    let run = || {
        let cache = tempfile::tempdir().unwrap();
        let store = tempfile::tempdir().unwrap();
        let regen = Regenerator::new(
            Arc::new(StubBackend::default()),
            GenerationCache::on_disk(cache.path()).unwrap(),
        );
        let out = run_experiment(&cfg, &plan, &data, &regen, Some(store.path())).unwrap();
        (
            out.metrics,
            out.phases,
            tree_bytes(store.path()),
            tree_bytes(cache.path()),
        )
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert_eq!(a.3, b.3);
    assert!(!a.3.is_empty());
}

#[test]
fn replay_respects_ledger_and_only_grows() {
    let cfg = small(|c| c.phases = 3);
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let plan = plan_for(&cfg);
    let mut previous: Option<ExemplarStore> = None;
    for k in 1..=plan.phase_count() {
        let prefix = PhasePlan {
            classes_per_phase: plan.classes_per_phase[..k].to_vec(),
            ..plan.clone()
        };
        // a prefix plan covers fewer classes than the dataset, so restrict the dataset too
        let mut d = data.clone();
        let keep: BTreeSet<u32> = prefix.classes_per_phase.concat().into_iter().collect();
        d.train.retain(|s| keep.contains(&s.class_id));
        d.test.retain(|s| keep.contains(&s.class_id));
        let remap: Vec<u32> = keep.iter().copied().collect();
        let idx = |c: u32| remap.iter().position(|&x| x == c).unwrap() as u32;
        d.labels = remap
            .iter()
            .map(|&c| data.labels[c as usize].clone())
            .collect();
        d.raw_labels = remap
            .iter()
            .map(|&c| data.raw_labels[c as usize].clone())
            .collect();
        for s in d.train.iter_mut().chain(d.test.iter_mut()) {
            s.class_id = idx(s.class_id);
        }
        let prefix = PhasePlan {
            classes_per_phase: prefix
                .classes_per_phase
                .iter()
                .map(|ph| ph.iter().map(|&c| idx(c)).collect())
                .collect(),
            ..prefix
        };
        let out = run_experiment(&cfg, &prefix, &d, &stub_regen(), None).unwrap();
        let store = out.store;
        let (r, s) = out.ledger.slots();
        for mem in store.classes().values() {
            assert!(mem.real.len() <= r as usize && mem.prompts.len() <= s as usize);
        }
        let ids = |st: &ExemplarStore| -> BTreeSet<String> {
            st.classes()
                .values()
                .flat_map(|m| {
                    m.real
                        .iter()
                        .map(|x| x.source_id.clone())
                        .chain(m.prompts.iter().map(|p| p.source_id.clone()))
                })
                .collect()
        };
        if let Some(prev) = &previous {
            assert!(
                ids(prev).is_subset(&ids(&store)),
                "phase {k} dropped exemplars"
            );
        }
        previous = Some(store);
    }
}

#[test]
fn plain_replay_streams_exactly_old_exemplars_plus_new_data() {
    let cfg = small(|c| {
        c.alpha = 0.0;
        c.p = 0.0;
        c.phases = 3;
    });
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let plan = plan_for(&cfg);
    let out = run_experiment(&cfg, &plan, &data, &stub_regen(), None).unwrap();
    let per_class_train = data.train.len() / cfg.classes;
    let mut stored = 0;
    for (ph, report) in out.phases.iter().enumerate() {
        assert_eq!(report.replay_prompts, 0);
        assert_eq!(report.replay_real, stored);
        assert_eq!(
            report.stream_len,
            plan.classes_per_phase[ph].len() * per_class_train + stored
        );
        stored += plan.classes_per_phase[ph].len() * cfg.units_per_class as usize;
    }
    assert_eq!(out.store.total_prompts(), 0);

    // same seeds and the same regenerated nothing: metrics reproduce
    let again = run_experiment(&cfg, &plan, &data, &stub_regen(), None).unwrap();
    assert_eq!(
        serde_json::to_vec(&out.metrics).unwrap(),
        serde_json::to_vec(&again.metrics).unwrap()
    );
}

#[test]
fn single_phase_is_plain_supervised_training() {
    let cfg = small(|c| {
        c.protocol = Protocol::Lfs;
        c.phases = 1;
    });
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let plan = plan_for(&cfg);
    let out = run_experiment(&cfg, &plan, &data, &stub_regen(), None).unwrap();

    let phase: Vec<_> = data
        .train
        .iter()
        .filter(|s| plan.classes_per_phase[0].contains(&s.class_id))
        .collect();
    let features: Vec<_> = phase.iter().map(|s| featurize(&s.image)).collect();
    let items: Vec<ReplayItem> = phase
        .iter()
        .enumerate()
        .map(|(i, s)| ReplayItem {
            label: s.class_id,
            real: Some(i),
            copies: vec![],
            augment: true,
        })
        .collect();
    let mut st = ClassifierState::new(FEATURE_DIM);
    st.add_classes(&plan.classes_per_phase[0]);
    train_phase(
        &mut st,
        &features,
        cfg.epochs_first,
        cfg.learning_rate,
        |e| {
            let s = epoch_view(
                &items,
                0.0,
                cfg.copies,
                &mut derive_rng(cfg.experiment_seed, &format!("epoch/0/{e}")),
            )?;
            Ok(s.into_iter().map(|x| (x.feature, x.label)).collect())
        },
    )
    .unwrap();
    let test_f: Vec<_> = data.test.iter().map(|s| featurize(&s.image)).collect();
    let test: Vec<_> = test_f
        .iter()
        .zip(data.test.iter().map(|s| s.class_id))
        .collect();
    assert_eq!(out.metrics.per_phase, vec![evaluate(&st, &test).unwrap()]);
    assert_eq!(out.classifier, st);
}

#[test]
fn average_is_the_mean_of_phases() {
    let cfg = small(|c| c.phases = 3);
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let out = run_experiment(&cfg, &plan_for(&cfg), &data, &stub_regen(), None).unwrap();
    let m = &out.metrics;
    assert_eq!(m.per_phase.len(), 4);
    let mean = m.per_phase.iter().sum::<f64>() / m.per_phase.len() as f64;
    assert!((m.average - mean).abs() <= f64::EPSILON * 4.0);
    assert_eq!(m.last, *m.per_phase.last().unwrap());
    assert!(m.per_phase.iter().all(|a| (0.0..=1.0).contains(a)));
}

#[test]
fn dataset_is_linearly_learnable() {
    let cfg = small(|c| {
        c.protocol = Protocol::Lfs;
        c.phases = 1;
        c.classes = 10;
        c.samples_per_class = 200;
        c.epochs_first = 60;
        c.alpha = 0.0;
        c.p = 0.0;
    });
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let out = run_experiment(&cfg, &plan_for(&cfg), &data, &stub_regen(), None).unwrap();
    assert!(out.metrics.last >= 0.9, "{}", out.metrics.last);
}

struct FailAfter {
    descriptor: BackendDescriptor,
    left: std::sync::atomic::AtomicUsize,
}

impl GenerationBackend for FailAfter {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn generate_raw(
        &self,
        edges: &BitEdgeMap,
        text: &TextualPrompt,
        seed: u64,
    ) -> Result<RgbImage, BackendError> {
        use std::sync::atomic::Ordering;
        if self
            .left
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_err()
        {
            return Err(BackendError::Transport("connection reset".into()));
        }
        Ok(edgemem::regen::stub_generate(edges, text, seed))
    }
}

#[test]
fn backend_failure_keeps_completed_phases() {
    let cfg = small(|_| {});
    let data = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let plan = plan_for(&cfg);
    let backend = FailAfter {
        descriptor: BackendDescriptor {
            kind: BackendKind::Stub,
            identifier: "flaky".into(),
            endpoint: None,
        },
        left: 5.into(),
    };
    let dir = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let regen = Regenerator::new(
        Arc::new(backend),
        GenerationCache::on_disk(cache.path()).unwrap(),
    );
    match run_experiment(&cfg, &plan, &data, &regen, Some(dir.path())) {
        Err(ExperimentError::Regen { phase: 1, source }) => {
            assert!(source.to_string().contains("connection reset"))
        }
        other => panic!(
            "expected a phase-1 generation failure, got {:?}",
            other.map(|o| o.metrics)
        ),
    }
    let kept = ExemplarStore::load(dir.path()).unwrap();
    let first: BTreeSet<u32> = plan.classes_per_phase[0].iter().copied().collect();
    assert_eq!(
        kept.classes().keys().copied().collect::<BTreeSet<_>>(),
        first
    );
    assert_eq!(regen.cache().len(), 5);
}
