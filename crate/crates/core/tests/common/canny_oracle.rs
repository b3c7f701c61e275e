//! Naive Canny written directly from the textbook description: direct 2-D
//! convolutions, atan2 angle binning, float magnitudes, and hysteresis by
//! repeated full-image sweeps until nothing changes.

pub struct Edges {
    pub height: usize,
    pub width: usize,
    pub on: Vec<bool>,
}

fn mirror(mut i: i64, n: i64) -> usize {
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// `rgb` is row-major RGB; thresholds on L2 Sobel magnitude.
pub fn reference_canny(rgb: &[u8], height: usize, width: usize, low: f32, high: f32) -> Edges {
    assert!(
        height >= 5 && width >= 5,
        "oracle handles the unpadded case only"
    );
    let (h, w) = (height as i64, width as i64);

    let gray: Vec<f64> = rgb
        .chunks(3)
        .map(|p| {
            (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64 + 0.5 + 1e-9).floor()
        })
        .collect();

    let t = [28.0, 61.0, 78.0, 61.0, 28.0];
    let mut blurred = vec![0.0f64; gray.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    let sy = mirror(y + i - 2, h);
                    let sx = mirror(x + j - 2, w);
                    acc += t[i as usize] * t[j as usize] * gray[sy * width + sx];
                }
            }
            blurred[(y * w + x) as usize] = ((acc + 32768.0) / 65536.0).floor();
        }
    }

    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut mag = vec![0.0f64; gray.len()];
    let mut angle = vec![0.0f64; gray.len()];
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    let v = blurred[mirror(y + i - 1, h) * width + mirror(x + j - 1, w)];
                    gx += kx[i as usize][j as usize] * v;
                    gy += ky[i as usize][j as usize] * v;
                }
            }
            let k = (y * w + x) as usize;
            mag[k] = gx.hypot(gy);
            let mut deg = gy.atan2(gx).to_degrees();
            if deg < 0.0 {
                deg += 180.0;
            }
            angle[k] = deg;
        }
    }

    let m_at = |y: i64, x: i64| {
        if y < 0 || x < 0 || y >= h || x >= w {
            0.0
        } else {
            mag[(y * w + x) as usize]
        }
    };
    let mut thin = vec![0.0f64; gray.len()];
    for y in 0..h {
        for x in 0..w {
            let k = (y * w + x) as usize;
            let m = mag[k];
            if m == 0.0 {
                continue;
            }
            let a = angle[k];
            // (negative-side neighbor, positive-side neighbor)
            let ((ay, ax), (by, bx)) = if !(22.5..157.5).contains(&a) {
                ((0, -1), (0, 1))
            } else if a < 67.5 {
                ((-1, -1), (1, 1))
            } else if a < 112.5 {
                ((-1, 0), (1, 0))
            } else {
                ((-1, 1), (1, -1))
            };
            if m > m_at(y + ay, x + ax) && m >= m_at(y + by, x + bx) {
                thin[k] = m;
            }
        }
    }

    let mut on: Vec<bool> = thin.iter().map(|&m| m > high as f64).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let k = (y * w + x) as usize;
                if on[k] || thin[k] <= low as f64 {
                    continue;
                }
                let touches = (-1..=1).any(|dy| {
                    (-1..=1).any(|dx| {
                        let (ny, nx) = (y + dy, x + dx);
                        ny >= 0 && nx >= 0 && ny < h && nx < w && on[(ny * w + nx) as usize]
                    })
                });
                if touches {
                    on[k] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Edges { height, width, on }
}
