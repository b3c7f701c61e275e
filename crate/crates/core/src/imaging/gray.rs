use super::RgbImage;

/// An 8-bit single-channel image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn from_raw(height: usize, width: usize, samples: Vec<u8>) -> Option<Self> {
        if height == 0 || width == 0 || samples.len() != height * width {
            return None;
        }
        Some(Self {
            height,
            width,
            samples,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut samples = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            samples,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// BT.601 luma, rounded half-up: `round(0.299 R + 0.587 G + 0.114 B)`.
///
/// Evaluated in integer thousandths so the result is exact.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let samples = img
        .pixels()
        .chunks_exact(3)
        .map(|px| {
            let weighted = 299 * u32::from(px[0]) + 587 * u32::from(px[1]) + 114 * u32::from(px[2]);
            ((weighted + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        height: img.height(),
        width: img.width(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luma_of(rgb: [u8; 3]) -> u8 {
        to_grayscale(&RgbImage::filled(1, 1, rgb)).get(0, 0)
    }

    #[test]
    fn black_and_white_endpoints() {
        assert_eq!(luma_of([0, 0, 0]), 0);
        assert_eq!(luma_of([255, 255, 255]), 255);
    }

    #[test]
    fn hand_evaluated_luma() {
        // 29.9 + 117.4 + 5.7 = 153.0
        assert_eq!(luma_of([100, 200, 50]), 153);
    }

    #[test]
    fn matches_float_formula_everywhere_on_a_grid() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(15) {
                for b in (0..=255).step_by(51) {
                    let f = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                    let expected = (f + 0.5 + 1e-9).floor().clamp(0.0, 255.0) as u8;
                    assert_eq!(
                        luma_of([r as u8, g as u8, b as u8]),
                        expected,
                        "{r} {g} {b}"
                    );
                }
            }
        }
    }
}
