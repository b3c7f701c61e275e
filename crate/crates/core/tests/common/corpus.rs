//! Deterministic synthetic image corpus for edge-detector comparisons.

use edgemem::imaging::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One image per index; sizes in `5..=64`, mixing shapes, ramps, stripes
/// and noise so every gradient direction and threshold band is exercised.
pub fn corpus_image(index: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FF_EE00 ^ index);
    let h = rng.random_range(5..=64usize);
    let w = rng.random_range(5..=64usize);
    let kind = index % 5;
    let bg = [rng.random::<u8>(), rng.random::<u8>(), rng.random::<u8>()];
    let mut img = RgbImage::filled(h, w, bg);
    match kind {
        0 => {
            for _ in 0..rng.random_range(1..6) {
                let (y0, x0) = (rng.random_range(0..h), rng.random_range(0..w));
                let (y1, x1) = (rng.random_range(y0..h), rng.random_range(x0..w));
                let c = [rng.random(), rng.random(), rng.random()];
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        img.put(y, x, c);
                    }
                }
            }
        }
        1 => {
            for _ in 0..rng.random_range(1..4) {
                let cy = rng.random_range(0.0..h as f64);
                let cx = rng.random_range(0.0..w as f64);
                let r = rng.random_range(1.5..(h.min(w) as f64 / 2.0).max(2.0));
                let c = [rng.random(), rng.random(), rng.random()];
                for y in 0..h {
                    for x in 0..w {
                        if (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2) <= r * r {
                            img.put(y, x, c);
                        }
                    }
                }
            }
        }
        2 => {
            let (ay, ax) = (rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            for y in 0..h {
                for x in 0..w {
                    let v = (128.0 + ay * y as f64 + ax * x as f64).rem_euclid(256.0) as u8;
                    img.put(y, x, [v, v.wrapping_mul(3), 255 - v]);
                }
            }
        }
        3 => {
            let period = rng.random_range(2..9usize);
            let diagonal = rng.random_bool(0.5);
            for y in 0..h {
                for x in 0..w {
                    let t = if diagonal { x + y } else { x };
                    if (t / period) % 2 == 0 {
                        img.put(y, x, [255 - bg[0], 255 - bg[1], 255 - bg[2]]);
                    }
                }
            }
        }
        _ => {
            for y in 0..h {
                for x in 0..w {
                    img.put(y, x, [rng.random(), rng.random(), rng.random()]);
                }
            }
        }
    }
    img
}
