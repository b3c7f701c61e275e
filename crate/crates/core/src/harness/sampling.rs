//! Per-epoch training stream: real images, generated replacements, and
//! synthetic replay exemplars.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

/// One entry of the training pool. Indices point into a caller-owned
/// feature table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayItem {
    pub label: u32,
    /// The real image, or `None` for a prompt-backed synthetic exemplar.
    pub real: Option<usize>,
    /// Generated copies (K of them when non-empty).
    pub copies: Vec<usize>,
    /// Whether the real image may be swapped for a copy.
    pub augment: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Real,
    /// Real image replaced by copy `k` (0-based).
    Replaced(usize),
    /// Synthetic exemplar represented by copy `k` (0-based).
    Synthetic(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamEntry {
    pub item: usize,
    pub feature: usize,
    pub label: u32,
    pub origin: Origin,
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("replacement probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("p = {0} > 0 needs at least one generated copy per image (K = 0)")]
    NoCopies(f64),
    #[error("item {item} has {found} copies, expected K = {expected}")]
    CopyCount {
        item: usize,
        expected: usize,
        found: usize,
    },
}

/// Builds one epoch's shuffled stream. Real items marked `augment` are
/// replaced by a uniformly chosen copy with probability `p`; synthetic
/// items always contribute exactly one uniformly chosen copy.
pub fn epoch_view<R: Rng>(
    items: &[ReplayItem],
    p: f64,
    k: usize,
    rng: &mut R,
) -> Result<Vec<StreamEntry>, SamplingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SamplingError::Probability(p));
    }
    if k == 0 && p > 0.0 {
        return Err(SamplingError::NoCopies(p));
    }
    for (i, it) in items.iter().enumerate() {
        let needs_k = it.real.is_none() || (it.augment && p > 0.0);
        if needs_k && it.copies.len() != k {
            return Err(SamplingError::CopyCount {
                item: i,
                expected: k,
                found: it.copies.len(),
            });
        }
        if it.real.is_none() && k == 0 {
            return Err(SamplingError::CopyCount {
                item: i,
                expected: 1,
                found: 0,
            });
        }
    }
    let mut stream = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let (feature, origin) = match it.real {
            Some(_) if it.augment && p > 0.0 && rng.random_bool(p) => {
                let c = rng.random_range(0..k);
                (it.copies[c], Origin::Replaced(c))
            }
            Some(real) => (real, Origin::Real),
            None => {
                let c = rng.random_range(0..k);
                (it.copies[c], Origin::Synthetic(c))
            }
        };
        stream.push(StreamEntry {
            item: i,
            feature,
            label: it.label,
            origin,
        });
    }
    stream.shuffle(rng);
    Ok(stream)
}
