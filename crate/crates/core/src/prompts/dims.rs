use serde::{Deserialize, Serialize};

/// How the short-side target γ is picked per image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaPolicy {
    /// Same γ for every image (512 for large-image datasets; any positive
    /// multiple of 64 is accepted, e.g. 64 for small synthetic images).
    Fixed(u32),
    /// 512 when the shorter side is at least 512, else 256.
    CaltechAdaptive,
}

impl GammaPolicy {
    pub const FIXED_512: GammaPolicy = GammaPolicy::Fixed(512);
}

pub fn choose_gamma(h: u32, w: u32, policy: GammaPolicy) -> u32 {
    match policy {
        GammaPolicy::Fixed(g) => {
            assert!(
                g > 0 && g % 64 == 0,
                "gamma must be a positive multiple of 64"
            );
            g
        }
        GammaPolicy::CaltechAdaptive => {
            if h.min(w) >= 512 {
                512
            } else {
                256
            }
        }
    }
}

/// Target `(H, W)` for an `h × w` image: the shorter side becomes `gamma`,
/// the longer side the multiple of 64 closest to its aspect-preserving
/// length (ties round up).
pub fn target_dims(h: u32, w: u32, gamma: u32) -> (u32, u32) {
    assert!(h > 0 && w > 0, "image dimensions must be positive");
    assert!(
        gamma > 0 && gamma.is_multiple_of(64),
        "gamma must be a positive multiple of 64"
    );
    let (short, long) = (h.min(w) as u64, h.max(w) as u64);
    // long' / 64 = long * gamma / (64 * short); round half up in integers.
    let num = long * gamma as u64;
    let den = 64 * short;
    let blocks = ((2 * num + den) / (2 * den)).max(1);
    let long_out = (blocks * 64) as u32;
    if h <= w {
        (gamma, long_out)
    } else {
        (long_out, gamma)
    }
}

/// Mean of `H·W / (h·w)` over a dataset's image sizes.
pub fn avg_area_ratio(dims: &[(u32, u32)], policy: GammaPolicy) -> f64 {
    assert!(!dims.is_empty(), "need at least one image size");
    let total: f64 = dims
        .iter()
        .map(|&(h, w)| {
            let (th, tw) = target_dims(h, w, choose_gamma(h, w, policy));
            (th as f64 * tw as f64) / (h as f64 * w as f64)
        })
        .sum();
    total / dims.len() as f64
}

/// Edge maps storable in one memory unit: `24 / ratio`, never above 24.
pub fn capacity_per_unit(ratio: f64) -> f64 {
    assert!(ratio > 0.0 && ratio.is_finite(), "ratio must be positive");
    24.0 / ratio.max(1.0)
}
