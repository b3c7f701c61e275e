//! Canny edge detection: blur, Sobel gradients, non-maximum suppression,
//! double threshold and 8-connected hysteresis.
//!
//! Every stage before thresholding runs in exact integer arithmetic, so
//! results do not depend on evaluation order or platform float behavior.

use serde::{Deserialize, Serialize};

use super::blur::{gaussian_blur_5x5, reflect101};
use super::{to_grayscale, BitEdgeMap, GrayImage, RgbImage};

/// Hysteresis thresholds on the L2 Sobel magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low: f32,
    pub high: f32,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 100.0,
            high: 200.0,
        }
    }
}

impl CannyParams {
    pub fn new(low: f32, high: f32) -> Self {
        assert!(
            0.0 <= low && low <= high,
            "thresholds must satisfy 0 <= low <= high"
        );
        Self { low, high }
    }
}

/// Gradient direction quantized to the axis used for suppression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Direction {
    /// Gradient along x; compares left/right neighbors.
    Deg0 = 0,
    /// Gradient along the down-right diagonal (image y points down).
    Deg45 = 1,
    /// Gradient along y; compares up/down neighbors.
    Deg90 = 2,
    /// Gradient along the down-left diagonal.
    Deg135 = 3,
}

impl Direction {
    /// Quantizes an integer gradient with exact comparisons against
    /// tan(22.5°) = √2 − 1 and tan(67.5°) = √2 + 1.
    pub fn quantize(gx: i32, gy: i32) -> Self {
        let (ax, ay) = (i64::from(gx).abs(), i64::from(gy).abs());
        let two_ax2 = 2 * ax * ax;
        if (ay + ax) * (ay + ax) < two_ax2 || (ax == 0 && ay == 0) {
            Direction::Deg0
        } else if ay > ax && (ay - ax) * (ay - ax) > two_ax2 {
            Direction::Deg90
        } else if (gx > 0) == (gy > 0) {
            Direction::Deg45
        } else {
            Direction::Deg135
        }
    }

    /// Offsets `(dy, dx)` of the two neighbors along the gradient.
    fn neighbors(self) -> [(isize, isize); 2] {
        match self {
            Direction::Deg0 => [(0, -1), (0, 1)],
            Direction::Deg45 => [(-1, -1), (1, 1)],
            Direction::Deg90 => [(-1, 0), (1, 0)],
            Direction::Deg135 => [(-1, 1), (1, -1)],
        }
    }
}

/// Sobel gradients of a (blurred) grayscale image.
#[derive(Clone, Debug)]
pub struct GradientField {
    height: usize,
    width: usize,
    gx: Vec<i32>,
    gy: Vec<i32>,
    mag_sq: Vec<u32>,
    direction: Vec<Direction>,
}

impl GradientField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gx(&self) -> &[i32] {
        &self.gx
    }

    pub fn gy(&self) -> &[i32] {
        &self.gy
    }

    pub fn direction(&self) -> &[Direction] {
        &self.direction
    }

    /// Squared L2 magnitude, exact.
    pub fn magnitude_squared(&self) -> &[u32] {
        &self.mag_sq
    }

    pub fn magnitude(&self) -> Vec<f32> {
        self.mag_sq
            .iter()
            .map(|&m| (m as f64).sqrt() as f32)
            .collect()
    }
}

/// 3×3 Sobel with reflect-101 borders.
pub fn gradient_field(img: &GrayImage) -> GradientField {
    let (h, w) = (img.height(), img.width());
    let px = |y: isize, x: isize| i32::from(img.get(reflect101(y, h), reflect101(x, w)));
    let n = h * w;
    let (mut gx, mut gy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut mag_sq, mut direction) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1))
                - (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
            let dy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1))
                - (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
            gx.push(dx);
            gy.push(dy);
            mag_sq.push((dx * dx + dy * dy) as u32);
            direction.push(Direction::quantize(dx, dy));
        }
    }
    GradientField {
        height: h,
        width: w,
        gx,
        gy,
        mag_sq,
        direction,
    }
}

/// Thinned squared magnitudes: a pixel survives when it is strictly larger
/// than its negative-side neighbor and no smaller than its positive-side
/// neighbor. The asymmetry keeps exactly one pixel of a symmetric ridge.
fn non_maximum_suppression(field: &GradientField) -> Vec<u32> {
    let (h, w) = (field.height as isize, field.width as isize);
    let at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h || x >= w {
            0
        } else {
            field.mag_sq[(y * w + x) as usize]
        }
    };
    let mut out = vec![0u32; field.mag_sq.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = field.mag_sq[i];
            if m == 0 {
                continue;
            }
            let [(ay, ax), (by, bx)] = field.direction[i].neighbors();
            if m > at(y + ay, x + ax) && m >= at(y + by, x + bx) {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thin: &[u32], h: usize, w: usize, params: CannyParams) -> BitEdgeMap {
    let low_sq = f64::from(params.low).powi(2);
    let high_sq = f64::from(params.high).powi(2);
    let mut edges = BitEdgeMap::new(h, w);
    let mut stack = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if f64::from(m) > high_sq && !edges.get(i / w, i % w) {
            edges.set(i / w, i % w, true);
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (y, x) = ((j / w) as isize, (j % w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (ny, nx) = (y + dy, x + dx);
                        if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                            continue;
                        }
                        let (ny, nx) = (ny as usize, nx as usize);
                        let k = ny * w + nx;
                        if f64::from(thin[k]) > low_sq && !edges.get(ny, nx) {
                            edges.set(ny, nx, true);
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    edges
}

/// Canny on a grayscale image. Inputs smaller than 5×5 are zero-padded to
/// 5×5 (anchored top-left) and the result is cropped back.
pub fn canny_gray(img: &GrayImage, params: CannyParams) -> BitEdgeMap {
    let (h, w) = (img.height(), img.width());
    if h < 5 || w < 5 {
        let padded = GrayImage::from_fn(h.max(5), w.max(5), |y, x| {
            if y < h && x < w {
                img.get(y, x)
            } else {
                0
            }
        });
        let full = canny_gray(&padded, params);
        return BitEdgeMap::from_fn(h, w, |y, x| full.get(y, x));
    }
    let blurred = gaussian_blur_5x5(img);
    let field = gradient_field(&blurred);
    let thin = non_maximum_suppression(&field);
    hysteresis(&thin, h, w, params)
}

/// Full Canny pipeline on an RGB image (BT.601 luma front-end).
pub fn canny_edges(img: &RgbImage, params: CannyParams) -> BitEdgeMap {
    canny_gray(&to_grayscale(img), params)
}
