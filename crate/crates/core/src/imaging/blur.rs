use super::GrayImage;

/// 1-D fixed-point Gaussian taps for σ = 1.4, summing to 256.
///
/// The 2-D kernel is the outer product of these taps, so the separable
/// two-pass sum is exact in integers and equal to a direct 5×5 convolution.
pub const GAUSS5: [u32; 5] = [28, 61, 78, 61, 28];

/// Reflect-101 border index (`dcb|abcd|cba`), valid for any offset.
#[inline]
pub fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

/// 5×5 Gaussian blur (σ = 1.4) with reflect-101 borders, rounded to 8 bits.
pub fn gaussian_blur_5x5(img: &GrayImage) -> GrayImage {
    let (h, w) = (img.height(), img.width());
    let src = img.samples();

    let mut horizontal = vec![0u32; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0u32;
            for (k, &tap) in GAUSS5.iter().enumerate() {
                let sx = reflect101(x as isize + k as isize - 2, w);
                acc += tap * u32::from(row[sx]);
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u32;
            for (k, &tap) in GAUSS5.iter().enumerate() {
                let sy = reflect101(y as isize + k as isize - 2, h);
                acc += tap * horizontal[sy * w + x];
            }
            out.push(((acc + (1 << 15)) >> 16) as u8);
        }
    }
    GrayImage::from_raw(h, w, out).expect("dimensions preserved")
}
