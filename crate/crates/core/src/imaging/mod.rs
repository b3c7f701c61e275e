//! Pixel-level primitives: color conversion, Canny edge detection,
//! resampling, and the packed 1-bit edge-map container.

mod blur;
mod canny;
mod ebm;
mod edges;
mod gray;
mod io;
mod resample;

pub use blur::{gaussian_blur_5x5, reflect101, GAUSS5};
pub use canny::{canny_edges, canny_gray, gradient_field, CannyParams, Direction, GradientField};
pub use ebm::{decode_ebm, encode_ebm, EbmError, EBM_HEADER_LEN, EBM_MAGIC};
pub use edges::{resize_edges_nearest, BitEdgeMap};
pub use gray::{to_grayscale, GrayImage};
pub use io::{
    decode_png_rgb, edges_to_png, encode_png_rgb, load_png, png_to_edges, save_png, ImageIoError,
};
pub use resample::{resize_rgb, ResizeMethod};

/// An 8-bit, 3-channel image stored row-major as `RGBRGB...`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbImage")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish_non_exhaustive()
    }
}

impl RgbImage {
    /// Builds an image from a raw buffer. Returns `None` when a dimension is
    /// zero or the buffer length is not `height * width * 3`.
    pub fn from_raw(height: usize, width: usize, pixels: Vec<u8>) -> Option<Self> {
        if height == 0 || width == 0 || pixels.len() != height * width * 3 {
            return None;
        }
        Some(Self {
            height,
            width,
            pixels,
        })
    }

    /// A `height × width` image filled with one color.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(height * width * 3)
            .collect();
        Self {
            height,
            width,
            pixels,
        }
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(y, x));
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Size of the raw pixel payload in bytes (one memory unit for an exemplar).
    pub fn payload_bytes(&self) -> usize {
        self.pixels.len()
    }

    /// Mean absolute per-sample difference against another image of equal size.
    pub fn mean_abs_diff(&self, other: &RgbImage) -> f64 {
        assert_eq!((self.height, self.width), (other.height, other.width));
        let total: u64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum();
        total as f64 / self.pixels.len() as f64
    }

    /// Per-channel mean color.
    pub fn mean_color(&self) -> [f64; 3] {
        let mut acc = [0u64; 3];
        for px in self.pixels.chunks_exact(3) {
            for c in 0..3 {
                acc[c] += u64::from(px[c]);
            }
        }
        let n = (self.height * self.width) as f64;
        [acc[0] as f64 / n, acc[1] as f64 / n, acc[2] as f64 / n]
    }
}
