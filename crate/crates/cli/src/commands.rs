use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use edgemem::harness::{
    featurize, make_phase_plan, procedural_dataset, run_experiment, BackendConfig,
    ExperimentConfig, ExperimentReport,
};
use edgemem::imaging::{load_png, save_png, CannyParams, RgbImage};
use edgemem::memory::{
    allocate, herding_order, select_exemplars, ClassMemory, ExemplarStore, RealExemplar,
};
use edgemem::prompts::{
    avg_area_ratio, capacity_per_unit, choose_gamma, extract_visual_prompt, read_label_file,
    GammaPolicy, PromptRecord,
};
use edgemem::regen::conformance::run_conformance;
use edgemem::regen::{
    FakeServer, GenerationBackend, GenerationCache, Regenerator, RemoteBackend, RemoteConfig,
    StubBackend,
};

use crate::error::{invalid, other, CliError};
use crate::{
    CompressArgs, ConformanceArgs, FakeServerArgs, GenDatasetArgs, InspectArgs, RegenerateArgs,
    RunCilArgs,
};

type CliResult = Result<(), CliError>;

/// Outputs never overwrite anything: the directory must be new or empty.
fn fresh_dir(path: &Path) -> Result<(), CliError> {
    match fs::read_dir(path) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(invalid(format!(
                    "{} exists and is not empty; choose a fresh output directory",
                    path.display()
                )));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            fs::create_dir_all(path).map_err(|e| other(format!("{}: {e}", path.display())))
        }
        Err(e) => Err(invalid(format!("{}: {e}", path.display()))),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents).map_err(|e| other(format!("{}: {e}", path.display())))
}

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| invalid(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e
            .map_err(|e| invalid(format!("{}: {e}", dir.display())))?
            .path();
        let is_png = p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png"));
        if (want_dirs && p.is_dir()) || (!want_dirs && p.is_file() && is_png) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn parse_gamma(s: &str) -> Result<GammaPolicy, CliError> {
    if s == "adaptive" {
        return Ok(GammaPolicy::CaltechAdaptive);
    }
    match s.parse::<u32>() {
        Ok(g) if g > 0 && g % 64 == 0 => Ok(GammaPolicy::Fixed(g)),
        _ => Err(invalid(format!(
            "--gamma must be a positive multiple of 64 or \"adaptive\", got {s:?}"
        ))),
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn compress(a: CompressArgs) -> CliResult {
    let policy = parse_gamma(&a.gamma)?;
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(invalid(format!("--alpha {} is outside [0, 1]", a.alpha)));
    }
    let labels = read_label_file(&a.labels, a.style).map_err(invalid)?;
    let class_dirs = sorted_entries(&a.input, true)?;
    if class_dirs.len() != labels.len() {
        return Err(invalid(format!(
            "label mismatch: {} class directories in {} but {} labels in {}",
            class_dirs.len(),
            a.input.display(),
            labels.len(),
            a.labels.display()
        )));
    }
    let mut classes: Vec<Vec<(String, RgbImage)>> = Vec::with_capacity(class_dirs.len());
    for dir in &class_dirs {
        let files = sorted_entries(dir, false)?;
        if files.is_empty() {
            return Err(invalid(format!("{} holds no PNG images", dir.display())));
        }
        let images = files
            .iter()
            .map(|f| Ok((stem(f), load_png(f).map_err(invalid)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        classes.push(images);
    }

    let capacity = match a.capacity {
        Some(c) => c,
        None => {
            let dims: Vec<(u32, u32)> = classes
                .iter()
                .flatten()
                .map(|(_, img)| (img.height() as u32, img.width() as u32))
                .collect();
            capacity_per_unit(avg_area_ratio(&dims, policy))
        }
    };
    let ledger = allocate(a.units, a.alpha, capacity).map_err(invalid)?;
    fresh_dir(&a.out)?;

    let mut store = ExemplarStore::new(ledger);
    for (class_id, (images, label)) in classes.iter().zip(&labels).enumerate() {
        let class_id = class_id as u32;
        let features: Vec<_> = images.iter().map(|(_, img)| featurize(img)).collect();
        let rank = herding_order(class_id, &features).map_err(other)?;
        let sel = select_exemplars(&rank, &ledger);
        let memory = ClassMemory {
            label: label.clone(),
            real: sel
                .real
                .iter()
                .map(|&i| RealExemplar {
                    source_id: images[i].0.clone(),
                    image: images[i].1.clone(),
                })
                .collect(),
            prompts: sel
                .prompts
                .iter()
                .map(|&i| {
                    let (source_id, img) = &images[i];
                    let gamma = choose_gamma(img.height() as u32, img.width() as u32, policy);
                    PromptRecord {
                        visual: extract_visual_prompt(
                            img,
                            gamma,
                            a.scheme.into(),
                            CannyParams::default(),
                        ),
                        textual: label.clone(),
                        class_id,
                        source_id: source_id.clone(),
                    }
                })
                .collect(),
        };
        store.insert_class(class_id, memory)?;
    }
    store.save(&a.out)?;

    let real_bytes: usize = store
        .classes()
        .values()
        .flat_map(|c| &c.real)
        .map(|r| r.image.payload_bytes())
        .sum();
    let prompt_bytes: usize = store
        .classes()
        .keys()
        .map(|&c| store.prompt_payload_bytes(c))
        .sum();
    let rgb_of_prompts: usize = store
        .classes()
        .values()
        .flat_map(|c| &c.prompts)
        .map(|p| p.visual.orig_h as usize * p.visual.orig_w as usize * 3)
        .sum();
    println!(
        "{} classes, R={} real + S={} prompts per class (capacity {:.3} per unit)",
        labels.len(),
        ledger.real_slots,
        ledger.synthetic_slots,
        ledger.capacity_per_unit
    );
    println!(
        "payload: {real_bytes} B real images, {prompt_bytes} B edge maps; edge maps stand in for {rgb_of_prompts} B of RGB"
    );
    if prompt_bytes > 0 {
        println!(
            "prompt compression ratio {:.2}:1",
            rgb_of_prompts as f64 / prompt_bytes as f64
        );
    }
    println!("store written to {}", a.out.display());
    Ok(())
}

fn backend_for(endpoint: Option<&str>) -> Result<Arc<dyn GenerationBackend>, CliError> {
    match endpoint {
        None => Ok(Arc::new(StubBackend::new())),
        Some(url) => RemoteBackend::connect(url, RemoteConfig::default())
            .map(|b| Arc::new(b) as Arc<dyn GenerationBackend>)
            .map_err(|e| CliError::Backend(format!("{url}: {e}"))),
    }
}

pub fn regenerate(a: RegenerateArgs) -> CliResult {
    if a.copies == 0 {
        return Err(invalid("--copies must be at least 1"));
    }
    let store = ExemplarStore::load(&a.store)?;
    let backend = backend_for(a.backend.endpoint.as_deref())?;
    let cache = GenerationCache::on_disk(&a.backend.cache).map_err(other)?;
    fresh_dir(&a.out)?;
    let regen = Regenerator::new(backend, cache);

    let mut written = 0;
    for (class_id, mem) in store.classes() {
        if mem.prompts.is_empty() {
            continue;
        }
        let dir = a.out.join(format!("c{class_id:03}"));
        fs::create_dir_all(&dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
        for prompt in &mem.prompts {
            for (k, img) in regen
                .regenerate_prompt(prompt, a.copies, a.base_seed)
                .into_iter()
                .enumerate()
            {
                let path = dir.join(format!("{}-{}.png", prompt.source_id, k + 1));
                save_png(&img?, &path).map_err(other)?;
                written += 1;
            }
        }
    }
    let stats = regen.cache().stats();
    println!(
        "wrote {written} images to {}; backend calls {}; cache hits {} of {} ({:.1}%)",
        a.out.display(),
        regen.backend_calls(),
        stats.hits,
        stats.hits + stats.misses,
        100.0 * stats.hit_rate()
    );
    Ok(())
}

pub fn run_cil(a: RunCilArgs) -> CliResult {
    let cfg = ExperimentConfig::load(&a.config).map_err(invalid)?;
    let plan = make_phase_plan(cfg.classes, cfg.phases, cfg.protocol, cfg.experiment_seed)
        .map_err(invalid)?;
    fresh_dir(&a.out)?;
    if let Some(dir) = &a.store {
        fresh_dir(dir)?;
    }
    let backend = match &cfg.backend {
        BackendConfig::Stub => backend_for(None)?,
        BackendConfig::Remote { endpoint } => backend_for(Some(endpoint))?,
    };
    let cache = match &a.cache {
        Some(dir) => GenerationCache::on_disk(dir).map_err(other)?,
        None => GenerationCache::in_memory(),
    };
    let regen = Regenerator::new(backend, cache);
    let dataset = procedural_dataset(
        cfg.classes,
        cfg.samples_per_class,
        cfg.image_size,
        cfg.dataset_seed,
    );
    let outcome = run_experiment(&cfg, &plan, &dataset, &regen, a.store.as_deref())?;
    let report = ExperimentReport::new(&cfg, &plan, &outcome);
    write(&a.out.join("report.json"), report.to_json())?;
    write(&a.out.join("report.txt"), report.to_text())?;
    write(&a.out.join("accuracy.csv"), report.accuracy_csv())?;
    print!("{}", report.to_text());
    println!("reports written to {}", a.out.display());
    Ok(())
}

pub fn inspect(a: InspectArgs) -> CliResult {
    let store = ExemplarStore::load(&a.store)?;
    let l = store.ledger();
    println!(
        "ledger: b={} alpha={:.3} R={} S={} capacity {:.3} per unit",
        l.units_per_class,
        l.alpha(),
        l.real_slots,
        l.synthetic_slots,
        l.capacity_per_unit
    );
    for (class_id, mem) in store.classes() {
        let real_bytes: usize = mem.real.iter().map(|r| r.image.payload_bytes()).sum();
        println!(
            "class {class_id:>4} {:?}: {} real ({real_bytes} B), {} prompts ({} B)",
            mem.label.as_str(),
            mem.real.len(),
            mem.prompts.len(),
            store.prompt_payload_bytes(*class_id)
        );
        if a.verbose {
            for r in &mem.real {
                println!(
                    "    real   {} {}x{}",
                    r.source_id,
                    r.image.height(),
                    r.image.width()
                );
            }
            for p in &mem.prompts {
                let e = &p.visual.edges;
                println!(
                    "    prompt {} {}x{} from {}x{}, {} edge pixels",
                    p.source_id,
                    e.height(),
                    e.width(),
                    p.visual.orig_h,
                    p.visual.orig_w,
                    e.count_ones()
                );
            }
        }
    }
    println!(
        "{} classes, {} real, {} prompts; checksums verified",
        store.classes().len(),
        store.total_real(),
        store.total_prompts()
    );
    Ok(())
}

pub fn gen_dataset(a: GenDatasetArgs) -> CliResult {
    if a.classes < 2 || a.per_class < 2 || a.size < 16 {
        return Err(invalid(
            "need --classes >= 2, --per-class >= 2 and --size >= 16",
        ));
    }
    fresh_dir(&a.out)?;
    let data = procedural_dataset(a.classes, a.per_class, a.size, a.seed);
    for (split, samples) in [("train", &data.train), ("test", &data.test)] {
        for s in samples {
            let dir = a.out.join(split).join(format!("c{:03}", s.class_id));
            fs::create_dir_all(&dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
            save_png(&s.image, &dir.join(format!("{}.png", s.source_id))).map_err(other)?;
        }
    }
    let mut labels = data.raw_labels.join("\n");
    labels.push('\n');
    write(&a.out.join("labels.txt"), labels)?;
    println!(
        "{} classes, {} train and {} test images written to {}",
        a.classes,
        data.train.len(),
        data.test.len(),
        a.out.display()
    );
    Ok(())
}

pub fn fake_server(a: FakeServerArgs) -> CliResult {
    let server = FakeServer::start(&a.addr, Arc::new(StubBackend::new()))
        .map_err(|e| invalid(format!("cannot listen on {}: {e}", a.addr)))?;
    println!("serving the stub generator at {}", server.url());
    server.join();
    Ok(())
}

pub fn conformance(a: ConformanceArgs) -> CliResult {
    let stub = StubBackend::new();
    let report = run_conformance(&a.endpoint, Some(&stub))
        .map_err(|e| CliError::Backend(format!("{}: {e}", a.endpoint)))?;
    print!("{report}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Backend(format!(
            "{} of {} conformance cases failed",
            report.cases.len() - report.passed(),
            report.cases.len()
        )))
    }
}
