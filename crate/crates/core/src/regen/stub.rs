//! Deterministic procedural generator standing in for a diffusion model.
//!
//! Regions enclosed by the (dilated) edges are flat-filled from a palette,
//! edges are drawn dark, low-amplitude noise is added and the result is
//! box-blurred. The palette's base hue comes from the text alone, so all
//! copies of one class share a color family; everything else varies with
//! the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{BackendDescriptor, BackendError, BackendKind, GenerationBackend};
use crate::imaging::{BitEdgeMap, RgbImage};
use crate::prompts::TextualPrompt;

pub const STUB_BACKEND_ID: &str = "stub-regionfill-v1";

const PALETTE_SIZE: usize = 6;

fn hsv_to_rgb(hue_deg: f64, s: f64, v: f64) -> [f64; 3] {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

fn luma(c: [f64; 3]) -> f64 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}

/// Blends toward white until luma reaches `min_luma`, keeping the hue.
fn lift(c: [f64; 3], min_luma: f64) -> [f64; 3] {
    let l = luma(c);
    if l >= min_luma {
        return c;
    }
    let t = (min_luma - l) / (255.0 - l);
    [
        c[0] + t * (255.0 - c[0]),
        c[1] + t * (255.0 - c[1]),
        c[2] + t * (255.0 - c[2]),
    ]
}

/// Region labels (4-connected) of the pixels not covered by `mask`, in
/// scan order of each region's first pixel. Masked pixels get `u32::MAX`.
fn label_regions(mask: &BitEdgeMap) -> Vec<u32> {
    let (h, w) = (mask.height(), mask.width());
    let mut labels = vec![u32::MAX; h * w];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..h * w {
        if labels[start] != u32::MAX || mask.get(start / w, start % w) {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (y, x) = (i / w, i % w);
            let mut visit = |ny: usize, nx: usize| {
                let j = ny * w + nx;
                if labels[j] == u32::MAX && !mask.get(ny, nx) {
                    labels[j] = next;
                    stack.push(j);
                }
            };
            if y > 0 {
                visit(y - 1, x);
            }
            if y + 1 < h {
                visit(y + 1, x);
            }
            if x > 0 {
                visit(y, x - 1);
            }
            if x + 1 < w {
                visit(y, x + 1);
            }
        }
        next += 1;
    }
    labels
}

fn box_blur3(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    RgbImage::from_fn(h, w, |y, x| {
        let mut acc = [0u32; 3];
        let mut n = 0u32;
        for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                let p = img.get(yy, xx);
                for c in 0..3 {
                    acc[c] += u32::from(p[c]);
                }
                n += 1;
            }
        }
        [0, 1, 2].map(|c| ((acc[c] + n / 2) / n) as u8)
    })
}

/// Pure function of `(edges, text, seed)`; output has the edge map's size.
pub fn stub_generate(edges: &BitEdgeMap, text: &TextualPrompt, seed: u64) -> RgbImage {
    let text_digest = Sha256::digest([b"stub-hue:".as_slice(), text.as_str().as_bytes()].concat());
    let base_hue =
        f64::from(u16::from_le_bytes([text_digest[0], text_digest[1]])) / 65536.0 * 360.0;

    let mut seeded = Sha256::new();
    seeded.update(b"stub-palette:");
    seeded.update((text.as_str().len() as u64).to_le_bytes());
    seeded.update(text.as_str().as_bytes());
    seeded.update(seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seeded.finalize().into());

    let palette: Vec<[f64; 3]> = (0..PALETTE_SIZE)
        .map(|_| {
            let hue = base_hue + rng.random_range(-35.0..35.0);
            let s = rng.random_range(0.45..0.9);
            let v = rng.random_range(0.6..1.0);
            lift(hsv_to_rgb(hue, s, v), rng.random_range(130.0..200.0))
        })
        .collect();
    let ink = hsv_to_rgb(base_hue, 0.5, rng.random_range(0.02..0.08));
    let offset = rng.random_range(0..PALETTE_SIZE);
    let amplitude: f64 = rng.random_range(4.0..12.0);

    let dilated = edges.dilate(1);
    let labels = label_regions(&dilated);
    let (h, w) = (edges.height(), edges.width());
    let raw = RgbImage::from_fn(h, w, |y, x| {
        let label = labels[y * w + x];
        let base = if label == u32::MAX {
            ink
        } else {
            palette[(label as usize + offset) % PALETTE_SIZE]
        };
        base.map(|c| {
            (c + rng.random_range(-amplitude..=amplitude))
                .round()
                .clamp(0.0, 255.0) as u8
        })
    });
    box_blur3(&raw)
}

/// Always-available local backend running [`stub_generate`].
pub struct StubBackend {
    descriptor: BackendDescriptor,
}

impl StubBackend {
    pub fn new() -> Self {
        Self {
            descriptor: BackendDescriptor {
                kind: BackendKind::Stub,
                identifier: STUB_BACKEND_ID.into(),
                endpoint: None,
            },
        }
    }
}

impl Default for StubBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerationBackend for StubBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn generate_raw(
        &self,
        edges: &BitEdgeMap,
        text: &TextualPrompt,
        seed: u64,
    ) -> Result<RgbImage, BackendError> {
        Ok(stub_generate(edges, text, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{canny_edges, CannyParams};

    fn text(s: &str) -> TextualPrompt {
        TextualPrompt::parse(s).unwrap()
    }

    fn ring(n: usize) -> BitEdgeMap {
        let c = (n as f64 - 1.0) / 2.0;
        let r = n as f64 * 0.3;
        BitEdgeMap::from_fn(n, n, |y, x| {
            let d = ((y as f64 - c).powi(2) + (x as f64 - c).powi(2)).sqrt();
            (d - r).abs() < 0.5
        })
    }

    #[test]
    fn deterministic() {
        let e = ring(64);
        assert_eq!(
            stub_generate(&e, &text("cat"), 5),
            stub_generate(&e, &text("cat"), 5)
        );
    }

    #[test]
    fn seeds_give_diverse_outputs() {
        let e = ring(64);
        let a = stub_generate(&e, &text("cat"), 1);
        let b = stub_generate(&e, &text("cat"), 2);
        assert!(a.mean_abs_diff(&b) > 2.0, "{}", a.mean_abs_diff(&b));
    }

    #[test]
    fn text_conditions_the_palette() {
        let e = BitEdgeMap::new(64, 64);
        for (t1, t2) in [
            ("cat", "dog"),
            ("apple pie", "electric guitar"),
            ("red triangle", "blue square"),
        ] {
            let a = stub_generate(&e, &text(t1), 3).mean_color();
            let b = stub_generate(&e, &text(t2), 3).mean_color();
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            assert!(d > 8.0, "{t1} vs {t2}: {d}");
        }
    }

    #[test]
    fn empty_edges_give_edge_free_texture() {
        let img = stub_generate(&BitEdgeMap::new(64, 64), &text("cat"), 7);
        let n = canny_edges(&img, CannyParams::default()).count_ones();
        assert!((n as f64) < 0.05 * 64.0 * 64.0, "{n} edge pixels");
    }

    #[test]
    fn ring_survives_regeneration() {
        let e = ring(64);
        let img = stub_generate(&e, &text("cat"), 9);
        let back = canny_edges(&img, CannyParams::default()).dilate(2);
        let recalled = e.ones().filter(|&(y, x)| back.get(y, x)).count();
        let recall = recalled as f64 / e.count_ones() as f64;
        assert!(recall >= 0.6, "recall {recall}");
    }
}
