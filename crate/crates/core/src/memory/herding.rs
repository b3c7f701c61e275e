use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A dense feature embedding of one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Unit-L2 copy; a zero vector stays zero.
    pub fn normalized(&self) -> FeatureVector {
        let norm = self.0.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            self.clone()
        } else {
            FeatureVector(self.0.iter().map(|x| x / norm).collect())
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HerdingError {
    #[error("no feature vectors to rank")]
    Empty,
    #[error("feature {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}

/// Samples of one class ordered from most to least representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HerdingRank {
    pub class_id: u32,
    pub ordering: Vec<usize>,
}

/// Greedy herding: at step `k`, pick the unpicked sample whose inclusion
/// brings the running mean of picks closest to the class mean. Ties go to
/// the lowest index.
pub fn herding_order(
    class_id: u32,
    features: &[FeatureVector],
) -> Result<HerdingRank, HerdingError> {
    let first = features.first().ok_or(HerdingError::Empty)?;
    let dim = first.dim();
    if let Some((index, f)) = features.iter().enumerate().find(|(_, f)| f.dim() != dim) {
        return Err(HerdingError::DimMismatch {
            index,
            expected: dim,
            found: f.dim(),
        });
    }
    let n = features.len();
    let phi: Vec<FeatureVector> = features.iter().map(FeatureVector::normalized).collect();

    let mut mean = vec![0.0; dim];
    for p in &phi {
        for (m, x) in mean.iter_mut().zip(&p.0) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut picked = vec![false; n];
    let mut running = vec![0.0; dim];
    let mut ordering = Vec::with_capacity(n);
    for k in 1..=n {
        let kf = k as f64;
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in phi.iter().enumerate() {
            if picked[i] {
                continue;
            }
            let dist: f64 =
                p.0.iter()
                    .zip(&running)
                    .zip(&mean)
                    .map(|((x, s), m)| (m - (x + s) / kf).powi(2))
                    .sum();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        let (choice, _) = best.expect("an unpicked sample remains");
        picked[choice] = true;
        ordering.push(choice);
        for (s, x) in running.iter_mut().zip(&phi[choice].0) {
            *s += x;
        }
    }
    Ok(HerdingRank { class_id, ordering })
}
