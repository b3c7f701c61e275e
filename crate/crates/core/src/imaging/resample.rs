use serde::{Deserialize, Serialize};

use super::RgbImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMethod {
    /// Windowed sinc with a = 3; the window widens when downscaling.
    Lanczos,
    /// Pixel-area relation: each target pixel averages the source area it covers.
    Area,
    Bilinear,
}

const LANCZOS_A: f64 = 3.0;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn lanczos(x: f64) -> f64 {
    if x.abs() < LANCZOS_A {
        sinc(x) * sinc(x / LANCZOS_A)
    } else {
        0.0
    }
}

/// Contribution list for one output sample: `(source index, weight)`.
type Taps = Vec<(usize, f64)>;

fn push_tap(taps: &mut Taps, idx: usize, w: f64) {
    match taps.iter_mut().find(|(i, _)| *i == idx) {
        Some((_, acc)) => *acc += w,
        None => taps.push((idx, w)),
    }
}

fn axis_taps(src: usize, dst: usize, method: ResizeMethod) -> Vec<Taps> {
    let ratio = src as f64 / dst as f64;
    let clamp = |k: isize| k.clamp(0, src as isize - 1) as usize;
    (0..dst)
        .map(|j| {
            let mut taps = Taps::new();
            match method {
                ResizeMethod::Lanczos => {
                    let center = (j as f64 + 0.5) * ratio - 0.5;
                    let scale = ratio.max(1.0);
                    let support = LANCZOS_A * scale;
                    let lo = (center - support).floor() as isize;
                    let hi = (center + support).ceil() as isize;
                    for k in lo..=hi {
                        let w = lanczos((k as f64 - center) / scale);
                        if w != 0.0 {
                            push_tap(&mut taps, clamp(k), w);
                        }
                    }
                }
                ResizeMethod::Area => {
                    let start = j as f64 * ratio;
                    let end = (j + 1) as f64 * ratio;
                    let mut k = start.floor() as usize;
                    while (k as f64) < end && k < src {
                        let overlap = end.min(k as f64 + 1.0) - start.max(k as f64);
                        if overlap > 1e-12 {
                            push_tap(&mut taps, k, overlap);
                        }
                        k += 1;
                    }
                }
                ResizeMethod::Bilinear => {
                    let pos = ((j as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
                    let k0 = pos.floor() as usize;
                    let frac = pos - k0 as f64;
                    push_tap(&mut taps, k0, 1.0 - frac);
                    if frac > 0.0 {
                        push_tap(&mut taps, (k0 + 1).min(src - 1), frac);
                    }
                }
            }
            let total: f64 = taps.iter().map(|(_, w)| w).sum();
            for (_, w) in &mut taps {
                *w /= total;
            }
            taps
        })
        .collect()
}

/// Resizes each channel independently; output samples are rounded and
/// clamped to `[0, 255]`. Resizing to the current size returns a copy.
pub fn resize_rgb(img: &RgbImage, height: usize, width: usize, method: ResizeMethod) -> RgbImage {
    assert!(
        height > 0 && width > 0,
        "target dimensions must be positive"
    );
    let (h, w) = (img.height(), img.width());
    if (h, w) == (height, width) {
        return img.clone();
    }
    let xt = axis_taps(w, width, method);
    let yt = axis_taps(h, height, method);
    let src = img.pixels();

    let mut horiz = vec![0f64; h * width * 3];
    for y in 0..h {
        for (x, taps) in xt.iter().enumerate() {
            let o = (y * width + x) * 3;
            for &(sx, wt) in taps {
                let s = (y * w + sx) * 3;
                for c in 0..3 {
                    horiz[o + c] += wt * f64::from(src[s + c]);
                }
            }
        }
    }

    let mut out = vec![0u8; height * width * 3];
    for (y, taps) in yt.iter().enumerate() {
        for x in 0..width {
            let o = (y * width + x) * 3;
            let mut acc = [0f64; 3];
            for &(sy, wt) in taps {
                let s = (sy * width + x) * 3;
                for c in 0..3 {
                    acc[c] += wt * horiz[s + c];
                }
            }
            for c in 0..3 {
                out[o + c] = acc[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    RgbImage::from_raw(height, width, out).expect("sized buffer")
}
