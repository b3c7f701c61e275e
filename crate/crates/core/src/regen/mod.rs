//! Exemplar regeneration from stored prompts.
//!
//! A [`GenerationBackend`] turns `(edge map, text, seed)` into an image at
//! the edge map's size. [`Regenerator`] wraps a backend with the
//! content-addressed cache and the resize back to the original image size.

mod cache;
pub mod conformance;
pub mod protocol;
#[cfg(feature = "remote")]
mod remote;
#[cfg(feature = "remote")]
mod server;
mod stub;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheError, CacheKey, CacheStats, GenerationCache};
#[cfg(feature = "remote")]
pub use remote::{remote_generate, RemoteBackend, RemoteConfig};
#[cfg(feature = "remote")]
pub use server::FakeServer;
pub use stub::{stub_generate, StubBackend, STUB_BACKEND_ID};

use crate::imaging::{encode_ebm, resize_rgb, BitEdgeMap, ResizeMethod, RgbImage};
use crate::prompts::{PromptRecord, TextualPrompt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Stub,
    Remote,
}

/// Identity of a generator. The identifier is part of every cache key and
/// must change whenever the generator's output for a given input changes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub identifier: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub endpoint: Option<String>,
}

/// Failure inside a backend, before any caching.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned {status}: {code}: {message}")]
    Protocol {
        status: u16,
        code: String,
        message: String,
    },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("generated image is {got_h}x{got_w}, expected {want_h}x{want_w}")]
    DimensionMismatch {
        want_h: usize,
        want_w: usize,
        got_h: usize,
        got_w: usize,
    },
}

impl BackendError {
    /// Whether re-sending the same request may succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Timeout | BackendError::Transport(_) => true,
            BackendError::Protocol { status, .. } => *status >= 500,
            BackendError::Malformed(_) | BackendError::DimensionMismatch { .. } => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RegenError {
    #[error("generation failed for cache key {key}: {source}")]
    Backend { key: CacheKey, source: BackendError },
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

pub trait GenerationBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Produces an image with the same height and width as `edges`.
    fn generate_raw(
        &self,
        edges: &BitEdgeMap,
        text: &TextualPrompt,
        seed: u64,
    ) -> Result<RgbImage, BackendError>;
}

/// One image to produce: conditions plus the size to resize the result to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationRequest {
    pub edges: BitEdgeMap,
    pub text: TextualPrompt,
    pub seed: u64,
    pub out_h: u32,
    pub out_w: u32,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), RegenError> {
        if !self.edges.height().is_multiple_of(64) || !self.edges.width().is_multiple_of(64) {
            return Err(RegenError::InvalidRequest(format!(
                "edge map {}x{} is not a multiple of 64",
                self.edges.height(),
                self.edges.width()
            )));
        }
        if self.out_h == 0 || self.out_w == 0 {
            return Err(RegenError::InvalidRequest(
                "output size must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn cache_key(&self, backend_id: &str) -> CacheKey {
        let mut h = Sha256::new();
        h.update(b"edgemem-generation-v1");
        let ebm = encode_ebm(&self.edges, self.out_h, self.out_w);
        for part in [
            ebm.as_slice(),
            self.text.as_str().as_bytes(),
            backend_id.as_bytes(),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        h.update(self.seed.to_le_bytes());
        CacheKey(h.finalize().into())
    }
}

/// Seed for copy `k` of a prompt. The encoding is injective in
/// `(base_seed, source_id, k)`, so distinct copies never share a seed input.
pub fn derive_seed(base_seed: u64, source_id: &str, k: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"edgemem-seed-v1");
    h.update(base_seed.to_le_bytes());
    h.update((source_id.len() as u64).to_le_bytes());
    h.update(source_id.as_bytes());
    h.update(k.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Backend plus cache: the only path through which the engine generates.
pub struct Regenerator {
    backend: Arc<dyn GenerationBackend>,
    cache: GenerationCache,
    backend_calls: AtomicU64,
}

impl Regenerator {
    pub fn new(backend: Arc<dyn GenerationBackend>, cache: GenerationCache) -> Self {
        Self {
            backend,
            cache,
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn backend(&self) -> &dyn GenerationBackend {
        self.backend.as_ref()
    }

    pub fn cache(&self) -> &GenerationCache {
        &self.cache
    }

    /// Number of requests that reached the backend (cache misses).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn generate(&self, req: &GenerationRequest) -> Result<RgbImage, RegenError> {
        req.validate()?;
        let key = req.cache_key(&self.backend.descriptor().identifier);
        let (out_h, out_w) = (req.out_h as usize, req.out_w as usize);
        if let Some(img) = self.cache.get(&key, out_h, out_w) {
            return Ok(img);
        }
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        let raw = self
            .backend
            .generate_raw(&req.edges, &req.text, req.seed)
            .map_err(|source| RegenError::Backend { key, source })?;
        let (h, w) = (req.edges.height(), req.edges.width());
        if (raw.height(), raw.width()) != (h, w) {
            let source = BackendError::DimensionMismatch {
                want_h: h,
                want_w: w,
                got_h: raw.height(),
                got_w: raw.width(),
            };
            return Err(RegenError::Backend { key, source });
        }
        let method = if out_h * out_w < h * w {
            ResizeMethod::Area
        } else {
            ResizeMethod::Lanczos
        };
        let img = resize_rgb(&raw, out_h, out_w, method);
        self.cache.put(&key, &img)?;
        Ok(img)
    }

    /// `K` copies of a stored prompt, one result per copy, seeds derived
    /// from `(base_seed, source_id, k)` for `k = 1..=K`.
    pub fn regenerate_prompt(
        &self,
        prompt: &PromptRecord,
        copies: u32,
        base_seed: u64,
    ) -> Vec<Result<RgbImage, RegenError>> {
        assert!(copies >= 1, "at least one copy is required");
        (1..=copies)
            .into_par_iter()
            .map(|k| {
                self.generate(&GenerationRequest {
                    edges: prompt.visual.edges.clone(),
                    text: prompt.textual.clone(),
                    seed: derive_seed(base_seed, &prompt.source_id, k),
                    out_h: prompt.visual.orig_h,
                    out_w: prompt.visual.orig_w,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::{ResizeScheme, VisualPrompt};

    fn ring(n: usize) -> BitEdgeMap {
        let c = (n as f64 - 1.0) / 2.0;
        let r = n as f64 * 0.3;
        BitEdgeMap::from_fn(n, n, |y, x| {
            let d = ((y as f64 - c).powi(2) + (x as f64 - c).powi(2)).sqrt();
            (d - r).abs() < 0.5
        })
    }

    fn prompt() -> PromptRecord {
        PromptRecord {
            visual: VisualPrompt {
                edges: ring(64),
                orig_h: 48,
                orig_w: 40,
                scheme: ResizeScheme::ImageFirst,
            },
            textual: TextualPrompt::parse("red triangle").unwrap(),
            class_id: 0,
            source_id: "train/0/7".into(),
        }
    }

    fn regen() -> Regenerator {
        Regenerator::new(Arc::new(StubBackend::new()), GenerationCache::in_memory())
    }

    #[test]
    fn second_request_is_served_from_cache() {
        let r = regen();
        let req = GenerationRequest {
            edges: ring(64),
            text: TextualPrompt::parse("cat").unwrap(),
            seed: 11,
            out_h: 64,
            out_w: 64,
        };
        let a = r.generate(&req).unwrap();
        let b = r.generate(&req).unwrap();
        assert_eq!(a, b);
        assert_eq!(r.backend_calls(), 1);
        assert_eq!(r.cache().stats().hits, 1);
    }

    #[test]
    fn output_is_resized_to_original_dims() {
        let out = regen().regenerate_prompt(&prompt(), 1, 3);
        let img = out[0].as_ref().unwrap();
        assert_eq!((img.height(), img.width()), (48, 40));
    }

    #[test]
    fn single_copy_uses_first_seed() {
        let r = regen();
        let p = prompt();
        let via_prompt = r.regenerate_prompt(&p, 1, 99).remove(0).unwrap();
        let direct = r
            .generate(&GenerationRequest {
                edges: p.visual.edges.clone(),
                text: p.textual.clone(),
                seed: derive_seed(99, &p.source_id, 1),
                out_h: 48,
                out_w: 40,
            })
            .unwrap();
        assert_eq!(via_prompt, direct);
    }

    #[test]
    fn copies_are_pairwise_distinct_and_reproducible() {
        let r = regen();
        let imgs: Vec<_> = r
            .regenerate_prompt(&prompt(), 5, 42)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert!(
                    imgs[i].mean_abs_diff(&imgs[j]) > 2.0,
                    "copies {i} and {j} too similar"
                );
            }
        }
        let calls = r.backend_calls();
        let again: Vec<_> = r
            .regenerate_prompt(&prompt(), 5, 42)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assert_eq!(imgs, again);
        assert_eq!(r.backend_calls(), calls);
    }

    #[test]
    fn seeds_depend_on_every_input() {
        let s = derive_seed(1, "a", 1);
        assert_ne!(s, derive_seed(2, "a", 1));
        assert_ne!(s, derive_seed(1, "b", 1));
        assert_ne!(s, derive_seed(1, "a", 2));
    }

    #[test]
    fn rejects_non_multiple_of_64() {
        let req = GenerationRequest {
            edges: BitEdgeMap::new(60, 64),
            text: TextualPrompt::parse("cat").unwrap(),
            seed: 0,
            out_h: 60,
            out_w: 64,
        };
        assert!(matches!(
            regen().generate(&req),
            Err(RegenError::InvalidRequest(_))
        ));
    }

    struct WrongSize;

    impl GenerationBackend for WrongSize {
        fn descriptor(&self) -> &BackendDescriptor {
            static D: std::sync::OnceLock<BackendDescriptor> = std::sync::OnceLock::new();
            D.get_or_init(|| BackendDescriptor {
                kind: BackendKind::Stub,
                identifier: "wrong".into(),
                endpoint: None,
            })
        }

        fn generate_raw(
            &self,
            _: &BitEdgeMap,
            _: &TextualPrompt,
            _: u64,
        ) -> Result<RgbImage, BackendError> {
            Ok(RgbImage::filled(8, 8, [0; 3]))
        }
    }

    #[test]
    fn wrong_backend_size_is_reported_with_key_and_not_cached() {
        let r = Regenerator::new(Arc::new(WrongSize), GenerationCache::in_memory());
        let req = GenerationRequest {
            edges: BitEdgeMap::new(64, 64),
            text: TextualPrompt::parse("cat").unwrap(),
            seed: 0,
            out_h: 64,
            out_w: 64,
        };
        match r.generate(&req) {
            Err(RegenError::Backend {
                key,
                source: BackendError::DimensionMismatch { .. },
            }) => {
                assert_eq!(key, req.cache_key("wrong"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(r.cache().len(), 0);
    }
}
