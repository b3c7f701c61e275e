//! On-disk exemplar store.
//!
//! Layout under the store root:
//!
//! ```text
//! manifest.json            written last, atomically (temp file + rename)
//! real/<class>/<n>.png     real exemplars
//! prompts/<class>/<n>.ebm  EBM1 edge-map blobs
//! ```
//!
//! Every blob is listed in the manifest with its SHA-256, so tampering or
//! truncation is caught on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::MemoryLedger;
use crate::imaging::{
    decode_ebm, decode_png_rgb, encode_ebm, encode_png_rgb, EbmError, ImageIoError, RgbImage,
};
use crate::prompts::{PromptRecord, ResizeScheme, TextualPrompt, VisualPrompt};

pub const STORE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("missing file {0}")]
    Missing(String),
    #[error("checksum mismatch for {path}: manifest {expected}, file {actual}")]
    Checksum {
        path: String,
        expected: String,
        actual: String,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("inconsistent store: {0}")]
    Inconsistent(String),
    #[error("bad edge-map blob {path}: {source}")]
    Ebm { path: String, source: EbmError },
    #[error("bad image blob {path}: {source}")]
    Image { path: String, source: ImageIoError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealExemplar {
    pub source_id: String,
    pub image: RgbImage,
}

/// Everything remembered about one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMemory {
    pub label: TextualPrompt,
    pub real: Vec<RealExemplar>,
    pub prompts: Vec<PromptRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExemplarStore {
    ledger: MemoryLedger,
    classes: BTreeMap<u32, ClassMemory>,
}

impl ExemplarStore {
    pub fn new(ledger: MemoryLedger) -> Self {
        Self {
            ledger,
            classes: BTreeMap::new(),
        }
    }

    pub fn ledger(&self) -> &MemoryLedger {
        &self.ledger
    }

    pub fn classes(&self) -> &BTreeMap<u32, ClassMemory> {
        &self.classes
    }

    pub fn class(&self, class_id: u32) -> Option<&ClassMemory> {
        self.classes.get(&class_id)
    }

    /// Adds a new class. Classes are append-only: an id can be added once.
    pub fn insert_class(&mut self, class_id: u32, memory: ClassMemory) -> Result<(), StoreError> {
        if self.classes.contains_key(&class_id) {
            return Err(StoreError::Inconsistent(format!(
                "class {class_id} already stored"
            )));
        }
        check_class(&self.ledger, class_id, &memory)?;
        self.classes.insert(class_id, memory);
        Ok(())
    }

    pub fn total_real(&self) -> usize {
        self.classes.values().map(|c| c.real.len()).sum()
    }

    pub fn total_prompts(&self) -> usize {
        self.classes.values().map(|c| c.prompts.len()).sum()
    }

    /// Packed edge-map bytes stored for a class (container headers excluded).
    pub fn prompt_payload_bytes(&self, class_id: u32) -> usize {
        self.classes.get(&class_id).map_or(0, |c| {
            c.prompts
                .iter()
                .map(|p| p.visual.edges.packed().len())
                .sum()
        })
    }

    pub fn save(&self, root: &Path) -> Result<StoreManifest, StoreError> {
        store_save(self, root)
    }

    pub fn load(root: &Path) -> Result<Self, StoreError> {
        store_load(root)
    }
}

fn check_class(
    ledger: &MemoryLedger,
    class_id: u32,
    memory: &ClassMemory,
) -> Result<(), StoreError> {
    if memory.real.len() > ledger.real_slots as usize {
        return Err(StoreError::Inconsistent(format!(
            "class {class_id}: {} real exemplars exceed R = {}",
            memory.real.len(),
            ledger.real_slots
        )));
    }
    if memory.prompts.len() > ledger.synthetic_slots as usize {
        return Err(StoreError::Inconsistent(format!(
            "class {class_id}: {} prompts exceed S = {}",
            memory.prompts.len(),
            ledger.synthetic_slots
        )));
    }
    if let Some(p) = memory
        .prompts
        .iter()
        .find(|p| p.class_id != class_id || p.textual != memory.label)
    {
        return Err(StoreError::Inconsistent(format!(
            "prompt {} does not match class {class_id} ({:?})",
            p.source_id,
            memory.label.as_str()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Real,
    Prompt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: EntryKind,
    pub path: String,
    pub class_id: u32,
    pub source_id: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<TextualPrompt>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scheme: Option<ResizeScheme>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestClass {
    pub class_id: u32,
    pub label: TextualPrompt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub store_version: u32,
    pub ledger: MemoryLedger,
    pub classes: Vec<ManifestClass>,
    pub entries: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_blob(root: &Path, rel: &str, bytes: &[u8]) -> Result<String, StoreError> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(sha256_hex(bytes))
}

pub fn store_save(store: &ExemplarStore, root: &Path) -> Result<StoreManifest, StoreError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    for (&class_id, memory) in &store.classes {
        classes.push(ManifestClass {
            class_id,
            label: memory.label.clone(),
        });
        for (n, real) in memory.real.iter().enumerate() {
            let path = format!("real/{class_id}/{n:04}.png");
            let sha256 = write_blob(root, &path, &encode_png_rgb(&real.image))?;
            entries.push(ManifestEntry {
                kind: EntryKind::Real,
                path,
                class_id,
                source_id: real.source_id.clone(),
                sha256,
                text: None,
                scheme: None,
            });
        }
        for (n, prompt) in memory.prompts.iter().enumerate() {
            let path = format!("prompts/{class_id}/{n:04}.ebm");
            let v = &prompt.visual;
            let sha256 = write_blob(root, &path, &encode_ebm(&v.edges, v.orig_h, v.orig_w))?;
            entries.push(ManifestEntry {
                kind: EntryKind::Prompt,
                path,
                class_id,
                source_id: prompt.source_id.clone(),
                sha256,
                text: Some(prompt.textual.clone()),
                scheme: Some(v.scheme),
            });
        }
    }
    let manifest = StoreManifest {
        store_version: STORE_VERSION,
        ledger: store.ledger,
        classes,
        entries,
    };
    let mut json =
        serde_json::to_vec_pretty(&manifest).map_err(|e| StoreError::Manifest(e.to_string()))?;
    json.push(b'\n');
    let tmp = root.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, &json).map_err(io_err(&tmp))?;
    let dest = root.join(MANIFEST_FILE);
    fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
    Ok(manifest)
}

fn safe_join(root: &Path, rel: &str) -> Result<PathBuf, StoreError> {
    let p = Path::new(rel);
    if p.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(StoreError::Manifest(format!(
            "entry path {rel:?} escapes the store"
        )));
    }
    Ok(root.join(p))
}

fn read_verified(root: &Path, entry: &ManifestEntry) -> Result<Vec<u8>, StoreError> {
    let path = safe_join(root, &entry.path)?;
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StoreError::Missing(entry.path.clone()))
        }
        Err(e) => return Err(io_err(&path)(e)),
    };
    let actual = sha256_hex(&bytes);
    if actual != entry.sha256 {
        return Err(StoreError::Checksum {
            path: entry.path.clone(),
            expected: entry.sha256.clone(),
            actual,
        });
    }
    Ok(bytes)
}

pub fn read_manifest(root: &Path) -> Result<StoreManifest, StoreError> {
    let path = root.join(MANIFEST_FILE);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StoreError::Missing(path.display().to_string()))
        }
        Err(e) => return Err(io_err(&path)(e)),
    };
    let manifest: StoreManifest =
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Manifest(e.to_string()))?;
    if manifest.store_version != STORE_VERSION {
        return Err(StoreError::Manifest(format!(
            "unsupported store_version {}",
            manifest.store_version
        )));
    }
    if !manifest.ledger.is_consistent() {
        return Err(StoreError::Inconsistent(
            "ledger fields do not match its allocation".into(),
        ));
    }
    Ok(manifest)
}

pub fn store_load(root: &Path) -> Result<ExemplarStore, StoreError> {
    let manifest = read_manifest(root)?;
    let mut classes: BTreeMap<u32, ClassMemory> = BTreeMap::new();
    for c in &manifest.classes {
        let fresh = ClassMemory {
            label: c.label.clone(),
            real: Vec::new(),
            prompts: Vec::new(),
        };
        if classes.insert(c.class_id, fresh).is_some() {
            return Err(StoreError::Inconsistent(format!(
                "class {} listed twice",
                c.class_id
            )));
        }
    }
    for entry in &manifest.entries {
        let bytes = read_verified(root, entry)?;
        let memory = classes.get_mut(&entry.class_id).ok_or_else(|| {
            StoreError::Inconsistent(format!(
                "entry {} names unknown class {}",
                entry.path, entry.class_id
            ))
        })?;
        match entry.kind {
            EntryKind::Real => {
                let image = decode_png_rgb(&bytes).map_err(|source| StoreError::Image {
                    path: entry.path.clone(),
                    source,
                })?;
                memory.real.push(RealExemplar {
                    source_id: entry.source_id.clone(),
                    image,
                });
            }
            EntryKind::Prompt => {
                let (edges, orig_h, orig_w) =
                    decode_ebm(&bytes).map_err(|source| StoreError::Ebm {
                        path: entry.path.clone(),
                        source,
                    })?;
                let (Some(text), Some(scheme)) = (&entry.text, entry.scheme) else {
                    return Err(StoreError::Manifest(format!(
                        "prompt entry {} lacks text or scheme",
                        entry.path
                    )));
                };
                memory.prompts.push(PromptRecord {
                    visual: VisualPrompt {
                        edges,
                        orig_h,
                        orig_w,
                        scheme,
                    },
                    textual: text.clone(),
                    class_id: entry.class_id,
                    source_id: entry.source_id.clone(),
                });
            }
        }
    }
    for (&class_id, memory) in &classes {
        check_class(&manifest.ledger, class_id, memory)?;
    }
    Ok(ExemplarStore {
        ledger: manifest.ledger,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BitEdgeMap;
    use crate::memory::allocate;

    fn label(s: &str) -> TextualPrompt {
        TextualPrompt::parse(s).unwrap()
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = ExemplarStore::new(allocate(5, 0.2, 18.838).unwrap());
        let manifest = store.save(dir.path()).unwrap();
        assert!(manifest.entries.is_empty());
        assert_eq!(ExemplarStore::load(dir.path()).unwrap(), store);
    }

    #[test]
    fn over_budget_class_is_rejected() {
        let mut store = ExemplarStore::new(allocate(2, 0.0, 24.0).unwrap());
        let real = (0..3)
            .map(|i| RealExemplar {
                source_id: format!("s{i}"),
                image: RgbImage::filled(2, 2, [i; 3]),
            })
            .collect();
        let err = store.insert_class(
            0,
            ClassMemory {
                label: label("cat"),
                real,
                prompts: vec![],
            },
        );
        assert!(matches!(err, Err(StoreError::Inconsistent(_))));
    }

    #[test]
    fn classes_are_append_only() {
        let mut store = ExemplarStore::new(allocate(2, 0.0, 24.0).unwrap());
        let m = ClassMemory {
            label: label("cat"),
            real: vec![],
            prompts: vec![],
        };
        store.insert_class(4, m.clone()).unwrap();
        assert!(store.insert_class(4, m).is_err());
    }

    #[test]
    fn mislabeled_prompt_is_rejected() {
        let mut store = ExemplarStore::new(allocate(4, 0.25, 24.0).unwrap());
        let prompt = PromptRecord {
            visual: VisualPrompt {
                edges: BitEdgeMap::new(64, 64),
                orig_h: 64,
                orig_w: 64,
                scheme: ResizeScheme::ImageFirst,
            },
            textual: label("dog"),
            class_id: 0,
            source_id: "x".into(),
        };
        let m = ClassMemory {
            label: label("cat"),
            real: vec![],
            prompts: vec![prompt],
        };
        assert!(store.insert_class(0, m).is_err());
    }

    #[test]
    fn missing_manifest_and_path_escape() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ExemplarStore::load(dir.path()),
            Err(StoreError::Missing(_))
        ));
        assert!(safe_join(dir.path(), "../x.png").is_err());
        assert!(safe_join(dir.path(), "/etc/passwd").is_err());
    }
}
