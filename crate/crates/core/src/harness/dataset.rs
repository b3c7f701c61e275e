//! Procedural polygon dataset standing in for a real image collection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::derive_rng;
use crate::imaging::RgbImage;
use crate::prompts::{normalize_label, LabelStyle, TextualPrompt};

const SHAPES: [&str; 8] = [
    "triangle", "square", "pentagon", "hexagon", "heptagon", "octagon", "nonagon", "decagon",
];
const ADJECTIVES: [&str; 8] = [
    "bright", "dusky", "glossy", "matte", "pale", "vivid", "faded", "deep",
];
const SUPERSAMPLE: usize = 4;
/// Additive darkening toward the corners, in gray levels at a corner.
/// Vignetting: gain falls by `VIGNETTE · (r² − VIGNETTE_PLATEAU)` outside a
/// flat center, with `r` the distance from the center in half-widths.
const VIGNETTE: f64 = 0.6;
const VIGNETTE_PLATEAU: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub class_id: u32,
    pub source_id: String,
    pub image: RgbImage,
    /// Polygon corners as `(y, x)` in pixel-center coordinates.
    pub vertices: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Labels as they would appear in a label file (`food` style).
    pub raw_labels: Vec<String>,
    pub labels: Vec<TextualPrompt>,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub image_size: usize,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.labels.len()
    }
}

pub fn sides_for_class(class_id: u32) -> usize {
    3 + class_id as usize % 8
}

fn raw_label(class_id: u32) -> String {
    let c = class_id as usize;
    let shape = SHAPES[c % 8];
    let adj = ADJECTIVES[(c / 8) % ADJECTIVES.len()];
    match c / 64 {
        0 => format!("{adj}_{shape}"),
        round => format!("{adj}_{shape}_v{round}"),
    }
}

/// Shapes cycle every 8 classes; each cycle shifts hue by 202.5° so
/// classes sharing a shape sit far apart on the hue circle.
fn class_hue(class_id: u32) -> f64 {
    let (shape, cycle) = (class_id % 8, class_id / 8);
    (shape as f64 * 45.0 + cycle as f64 * 202.5) % 360.0
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
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

/// Corners of a regular `sides`-gon.
pub fn polygon_vertices(
    sides: usize,
    cy: f64,
    cx: f64,
    radius: f64,
    rotation: f64,
) -> Vec<(f64, f64)> {
    (0..sides)
        .map(|k| {
            let a = rotation + std::f64::consts::TAU * k as f64 / sides as f64;
            (cy + radius * a.sin(), cx + radius * a.cos())
        })
        .collect()
}

/// Even-odd point-in-polygon test.
fn inside(vertices: &[(f64, f64)], y: f64, x: f64) -> bool {
    let mut hit = false;
    let n = vertices.len();
    for i in 0..n {
        let (y0, x0) = vertices[i];
        let (y1, x1) = vertices[(i + 1) % n];
        if (y0 > y) != (y1 > y) && x < x0 + (y - y0) / (y1 - y0) * (x1 - x0) {
            hit = !hit;
        }
    }
    hit
}

/// Background gray strictly between the polygon's darkest and brightest
/// channel, on whichever side leaves more luma contrast. Each channel then
/// keeps its own contrast sign, so hue survives per-channel normalization.
fn background_gray(fg: [f64; 3]) -> f64 {
    let lo = fg.iter().cloned().fold(f64::MAX, f64::min);
    let hi = fg.iter().cloned().fold(f64::MIN, f64::max);
    let l = luma(fg);
    let (a, b) = (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    if (a - l).abs() > (b - l).abs() {
        a
    } else {
        b
    }
}

fn render(class_id: u32, size: usize, rng: &mut ChaCha8Rng) -> (RgbImage, Vec<(f64, f64)>) {
    let s = size as f64;
    let mid = (s - 1.0) / 2.0;
    let radius = rng.random_range(0.26..0.40) * s;
    // centers stay within the middle half of the range that keeps the polygon inside
    let slack = (mid - radius - 2.0).max(0.0) / 2.0;
    let cy = mid + rng.random_range(-slack..=slack);
    let cx = mid + rng.random_range(-slack..=slack);
    let rotation = rng.random_range(0.0..std::f64::consts::TAU);
    let vertices = polygon_vertices(sides_for_class(class_id), cy, cx, radius, rotation);

    let fg = hsv(
        class_hue(class_id) + rng.random_range(-4.0..4.0),
        rng.random_range(0.85..1.0),
        rng.random_range(0.9..1.0),
    );
    let gray = background_gray(fg);
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(-8.0..8.0));
    let bg = [gray + tint[0], gray + tint[1], gray + tint[2]];

    let amp = rng.random_range(4.0..10.0);
    let freq = rng.random_range(0.15..0.5);
    let dir = rng.random_range(0.0..std::f64::consts::TAU);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let (fy, fx) = (freq * dir.sin(), freq * dir.cos());

    let sub = SUPERSAMPLE as f64;
    let mut pixels = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let mut covered = 0usize;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / sub;
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / sub;
                    covered += usize::from(inside(&vertices, py, px));
                }
            }
            let t = covered as f64 / (sub * sub);
            let wave = amp * (fy * y as f64 + fx * x as f64 + phase).sin();
            let (dy, dx) = ((y as f64 - mid) / (s / 2.0), (x as f64 - mid) / (s / 2.0));
            let gain = 1.0 - VIGNETTE * (dy * dy + dx * dx - VIGNETTE_PLATEAU).max(0.0);
            for ch in 0..3 {
                let noise = rng.random_range(-4.0..4.0);
                let v = (t * fg[ch] + (1.0 - t) * (bg[ch] + wave)) * gain + noise;
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    (
        RgbImage::from_raw(size, size, pixels).expect("buffer sized above"),
        vertices,
    )
}

/// `classes` polygon classes, `per_class` images each, split 80/20 into
/// train and test (at least one test image per class when `per_class ≥ 2`).
pub fn procedural_dataset(
    classes: usize,
    per_class: usize,
    image_size: usize,
    seed: u64,
) -> Dataset {
    assert!(classes >= 2, "need at least two classes");
    assert!(per_class >= 2, "need at least two images per class");
    assert!(image_size >= 16, "images must be at least 16 pixels");
    let n_test = (per_class / 5).max(1);
    let n_train = per_class - n_test;
    let raw_labels: Vec<String> = (0..classes as u32).map(raw_label).collect();
    let labels = raw_labels
        .iter()
        .map(|r| normalize_label(r, LabelStyle::Food).expect("generated labels are valid"))
        .collect();
    let mut train = Vec::with_capacity(classes * n_train);
    let mut test = Vec::with_capacity(classes * n_test);
    for c in 0..classes as u32 {
        for i in 0..per_class {
            let mut rng = derive_rng(seed, &format!("dataset/{c}/{i}"));
            let (image, vertices) = render(c, image_size, &mut rng);
            let sample = Sample {
                class_id: c,
                source_id: format!("c{c:03}-{i:04}"),
                image,
                vertices,
            };
            if i < n_train {
                train.push(sample);
            } else {
                test.push(sample);
            }
        }
    }
    Dataset {
        raw_labels,
        labels,
        train,
        test,
        image_size,
    }
}
