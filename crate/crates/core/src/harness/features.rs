use crate::imaging::{resize_rgb, ResizeMethod, RgbImage};
use crate::memory::FeatureVector;

pub const FEATURE_SIDE: usize = 16;
pub const FEATURE_DIM: usize = FEATURE_SIDE * FEATURE_SIDE * 3;

/// Area-resize to 16×16, standardize each channel to zero mean and unit
/// variance (a constant channel maps to zeros), flatten channel-major.
pub fn featurize(img: &RgbImage) -> FeatureVector {
    let small = resize_rgb(img, FEATURE_SIDE, FEATURE_SIDE, ResizeMethod::Area);
    let px = small.pixels();
    let n = (FEATURE_SIDE * FEATURE_SIDE) as f64;
    let mut out = Vec::with_capacity(FEATURE_DIM);
    for ch in 0..3 {
        let vals: Vec<f64> = px[ch..].iter().step_by(3).map(|&v| v as f64).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd < 1e-9 {
            out.extend(std::iter::repeat_n(0.0, vals.len()));
        } else {
            out.extend(vals.iter().map(|v| (v - mean) / sd));
        }
    }
    FeatureVector(out)
}
