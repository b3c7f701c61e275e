/// A binary edge image packed one bit per pixel.
///
/// Rows are padded to whole bytes, bits are MSB-first within a byte, and
/// padding bits are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitEdgeMap {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

impl std::fmt::Debug for BitEdgeMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitEdgeMap")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("set", &self.count_ones())
            .finish()
    }
}

impl BitEdgeMap {
    /// An all-zero map. Panics if a dimension is zero.
    pub fn new(height: usize, width: usize) -> Self {
        assert!(
            height > 0 && width > 0,
            "edge map dimensions must be positive"
        );
        Self {
            height,
            width,
            bits: vec![0; height * width.div_ceil(8)],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut map = Self::new(height, width);
        for y in 0..height {
            for x in 0..width {
                if f(y, x) {
                    map.set(y, x, true);
                }
            }
        }
        map
    }

    /// Wraps packed rows. Returns `None` on a length mismatch or when any
    /// padding bit is set.
    pub fn from_packed(height: usize, width: usize, bits: Vec<u8>) -> Option<Self> {
        if height == 0 || width == 0 || bits.len() != height * width.div_ceil(8) {
            return None;
        }
        let map = Self {
            height,
            width,
            bits,
        };
        map.padding_is_clear().then_some(map)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bytes_per_row(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn packed(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        debug_assert!(y < self.height && x < self.width);
        let byte = self.bits[y * self.bytes_per_row() + x / 8];
        byte & (0x80 >> (x % 8)) != 0
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, on: bool) {
        assert!(y < self.height && x < self.width, "({y},{x}) out of bounds");
        let i = y * self.bytes_per_row() + x / 8;
        let mask = 0x80 >> (x % 8);
        if on {
            self.bits[i] |= mask;
        } else {
            self.bits[i] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Coordinates of every set pixel in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .filter(move |&x| self.get(y, x))
                .map(move |x| (y, x))
        })
    }

    pub(crate) fn padding_is_clear(&self) -> bool {
        let rem = self.width % 8;
        if rem == 0 {
            return true;
        }
        let pad_mask = 0xFFu8 >> rem;
        let bpr = self.bytes_per_row();
        (0..self.height).all(|y| self.bits[y * bpr + bpr - 1] & pad_mask == 0)
    }

    /// Morphological dilation with a square window of the given radius.
    pub fn dilate(&self, radius: usize) -> BitEdgeMap {
        let (h, w) = (self.height, self.width);
        let mut out = BitEdgeMap::new(h, w);
        for (y, x) in self.ones() {
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    out.set(yy, xx, true);
                }
            }
        }
        out
    }
}

/// Nearest-neighbor resize with pixel-center mapping: target `(i, j)` reads
/// source `(floor((i + 0.5) h / H), floor((j + 0.5) w / W))`.
pub fn resize_edges_nearest(e: &BitEdgeMap, height: usize, width: usize) -> BitEdgeMap {
    assert!(
        height > 0 && width > 0,
        "target dimensions must be positive"
    );
    if (height, width) == (e.height, e.width) {
        return e.clone();
    }
    // (2i + 1) h / 2H is the exact rational form of (i + 0.5) h / H.
    let src_y: Vec<usize> = (0..height)
        .map(|i| (2 * i + 1) * e.height / (2 * height))
        .collect();
    let src_x: Vec<usize> = (0..width)
        .map(|j| (2 * j + 1) * e.width / (2 * width))
        .collect();
    let mut out = BitEdgeMap::new(height, width);
    for (i, &sy) in src_y.iter().enumerate() {
        for (j, &sx) in src_x.iter().enumerate() {
            if e.get(sy, sx) {
                out.set(i, j, true);
            }
        }
    }
    out
}
