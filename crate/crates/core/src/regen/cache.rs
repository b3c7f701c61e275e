//! Content-addressed store of generated images.
//!
//! On disk each entry is `<dir>/<k0k1>/<key hex>.rgb` holding
//! `"RGB1" | h: u32 | w: u32 | sha256(pixels) | pixels`. Entries that fail
//! their digest are treated as misses and rewritten on the next put.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::imaging::RgbImage;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(pub [u8; 32]);

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CacheKey({self})")
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cache entry {0} already holds a different image")]
    Conflict(CacheKey),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub corrupt: u64,
    pub writes: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            1.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

#[derive(Default)]
struct Counters {
    hits: AtomicU64,
    misses: AtomicU64,
    corrupt: AtomicU64,
    writes: AtomicU64,
}

pub struct GenerationCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<CacheKey, RgbImage>>,
    counters: Counters,
    write_lock: Mutex<()>,
}

const MAGIC: &[u8; 4] = b"RGB1";
const HEADER: usize = 4 + 8 + 32;

fn encode_entry(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + img.pixels().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(img.pixels()));
    out.extend_from_slice(img.pixels());
    out
}

fn decode_entry(bytes: &[u8]) -> Option<RgbImage> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return None;
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().ok()?) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().ok()?) as usize;
    let pixels = &bytes[HEADER..];
    if Sha256::digest(pixels).as_slice() != &bytes[12..44] {
        return None;
    }
    RgbImage::from_raw(h, w, pixels.to_vec())
}

impl GenerationCache {
    /// Process-local cache; contents vanish with the value.
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            memory: Mutex::default(),
            counters: Counters::default(),
            write_lock: Mutex::default(),
        }
    }

    /// Persistent cache rooted at `dir` (created if missing).
    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| CacheError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: Some(dir),
            ..Self::in_memory()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn entry_path(dir: &Path, key: &CacheKey) -> PathBuf {
        let hex = key.to_string();
        dir.join(&hex[..2]).join(format!("{hex}.rgb"))
    }

    fn read(&self, key: &CacheKey) -> Option<Result<RgbImage, ()>> {
        match &self.dir {
            None => self.memory.lock().unwrap().get(key).cloned().map(Ok),
            Some(dir) => {
                let bytes = fs::read(Self::entry_path(dir, key)).ok()?;
                Some(decode_entry(&bytes).ok_or(()))
            }
        }
    }

    /// Returns the cached image when present, intact, and of the expected size.
    pub fn get(&self, key: &CacheKey, height: usize, width: usize) -> Option<RgbImage> {
        match self.read(key) {
            Some(Ok(img)) if (img.height(), img.width()) == (height, width) => {
                self.counters.hits.fetch_add(1, Ordering::Relaxed);
                Some(img)
            }
            Some(_) => {
                self.counters.corrupt.fetch_add(1, Ordering::Relaxed);
                self.counters.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
            None => {
                self.counters.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    /// Stores an image. The first writer of a key wins; a later put of the
    /// same image is a no-op and a put of a different image is a conflict.
    pub fn put(&self, key: &CacheKey, img: &RgbImage) -> Result<(), CacheError> {
        let _guard = self.write_lock.lock().unwrap();
        match self.read(key) {
            Some(Ok(existing)) if &existing == img => return Ok(()),
            Some(Ok(_)) => return Err(CacheError::Conflict(*key)),
            _ => {}
        }
        self.counters.writes.fetch_add(1, Ordering::Relaxed);
        match &self.dir {
            None => {
                self.memory.lock().unwrap().insert(*key, img.clone());
            }
            Some(dir) => {
                let path = Self::entry_path(dir, key);
                let io = |p: &Path| {
                    let p = p.display().to_string();
                    move |source| CacheError::Io { path: p, source }
                };
                let parent = path.parent().expect("entry has a parent");
                fs::create_dir_all(parent).map_err(io(parent))?;
                let tmp = path.with_extension(format!("tmp{}", std::process::id()));
                fs::write(&tmp, encode_entry(img)).map_err(io(&tmp))?;
                fs::rename(&tmp, &path).map_err(io(&path))?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match &self.dir {
            None => self.memory.lock().unwrap().len(),
            Some(dir) => fs::read_dir(dir)
                .into_iter()
                .flatten()
                .flatten()
                .filter_map(|d| fs::read_dir(d.path()).ok())
                .flat_map(|rd| rd.flatten())
                .filter(|e| e.path().extension().is_some_and(|x| x == "rgb"))
                .count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.counters.hits.load(Ordering::Relaxed),
            misses: self.counters.misses.load(Ordering::Relaxed),
            corrupt: self.counters.corrupt.load(Ordering::Relaxed),
            writes: self.counters.writes.load(Ordering::Relaxed),
        }
    }
}
