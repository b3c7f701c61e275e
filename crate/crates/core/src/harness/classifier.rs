//! Multinomial logistic regression trained with minibatch SGD.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sampling::SamplingError;
use crate::memory::FeatureVector;

pub const BATCH_SIZE: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch} (learning rate {lr}, max |w| {max_weight})")]
    NonFinite {
        epoch: usize,
        batch: usize,
        loss: f64,
        lr: f64,
        max_weight: f64,
    },
    #[error("feature dimension {found} does not match classifier dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("label {0} has no classifier row")]
    UnknownLabel(u32),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("empty test set")]
    Empty,
    #[error("test label {0} has not been observed by the classifier")]
    Unobserved(u32),
    #[error("feature dimension {found} does not match classifier dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
}

/// Weights are stored row-major, one row per observed class in arrival order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierState {
    dim: usize,
    class_ids: Vec<u32>,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainStats {
    pub steps: usize,
    /// Mean batch loss over the final epoch.
    pub final_loss: f64,
}

impl ClassifierState {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            class_ids: Vec::new(),
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Appends zero rows for classes not seen before.
    pub fn add_classes(&mut self, ids: &[u32]) {
        for &id in ids {
            if !self.class_ids.contains(&id) {
                self.class_ids.push(id);
                self.weights.extend(std::iter::repeat_n(0.0, self.dim));
                self.bias.push(0.0);
            }
        }
    }

    pub fn row_of(&self, class_id: u32) -> Option<usize> {
        self.class_ids.iter().position(|&c| c == class_id)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Predicted class id (lowest row wins ties). Panics without classes.
    pub fn predict(&self, x: &FeatureVector) -> u32 {
        let logits = self.logits(x.values());
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        self.class_ids[best]
    }

    fn check(&self, batch: &[(&FeatureVector, u32)]) -> Result<Vec<usize>, TrainError> {
        batch
            .iter()
            .map(|(x, y)| {
                if x.dim() != self.dim {
                    return Err(TrainError::DimMismatch {
                        expected: self.dim,
                        found: x.dim(),
                    });
                }
                self.row_of(*y).ok_or(TrainError::UnknownLabel(*y))
            })
            .collect()
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss(&self, batch: &[(&FeatureVector, u32)]) -> Result<f64, TrainError> {
        Ok(self.loss_and_gradient(batch)?.0)
    }

    /// Mean cross-entropy and its gradient `(d_weights, d_bias)`.
    pub fn loss_and_gradient(
        &self,
        batch: &[(&FeatureVector, u32)],
    ) -> Result<(f64, Vec<f64>, Vec<f64>), TrainError> {
        let rows = self.check(batch)?;
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.bias.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for ((x, _), &y) in batch.iter().zip(&rows) {
            let logits = self.logits(x.values());
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            loss += z.ln() + max - logits[y];
            for (r, e) in exps.iter().enumerate() {
                let d = (e / z - f64::from(u8::from(r == y))) * scale;
                gb[r] += d;
                for (g, v) in gw[r * self.dim..(r + 1) * self.dim]
                    .iter_mut()
                    .zip(x.values())
                {
                    *g += d * v;
                }
            }
        }
        Ok((loss * scale, gw, gb))
    }
}

/// Step-size multiplier for `epoch` of `epochs`: ×0.1 from 60%, ×0.01 from 85%.
pub fn lr_factor(epoch: usize, epochs: usize) -> f64 {
    let at = epoch as f64;
    let total = epochs as f64;
    if at >= 0.85 * total {
        0.01
    } else if at >= 0.6 * total {
        0.1
    } else {
        1.0
    }
}

/// Runs `epochs` epochs of minibatch SGD. `stream(epoch)` supplies that
/// epoch's `(feature index, label)` sequence, already shuffled.
pub fn train_phase<F>(
    state: &mut ClassifierState,
    features: &[FeatureVector],
    epochs: usize,
    lr: f64,
    mut stream: F,
) -> Result<TrainStats, TrainError>
where
    F: FnMut(usize) -> Result<Vec<(usize, u32)>, TrainError>,
{
    let mut steps = 0;
    let mut final_loss = f64::NAN;
    for epoch in 0..epochs {
        let step = lr * lr_factor(epoch, epochs);
        let order = stream(epoch)?;
        let (mut sum, mut batches) = (0.0, 0);
        for (b, chunk) in order.chunks(BATCH_SIZE).enumerate() {
            let batch: Vec<(&FeatureVector, u32)> =
                chunk.iter().map(|&(i, y)| (&features[i], y)).collect();
            let (loss, gw, gb) = state.loss_and_gradient(&batch)?;
            if !loss.is_finite() {
                let max_weight = state.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: b,
                    loss,
                    lr: step,
                    max_weight,
                });
            }
            if step != 0.0 {
                for (w, g) in state.weights.iter_mut().zip(&gw) {
                    *w -= step * g;
                }
                for (w, g) in state.bias.iter_mut().zip(&gb) {
                    *w -= step * g;
                }
            }
            sum += loss;
            batches += 1;
            steps += 1;
        }
        final_loss = if batches == 0 {
            f64::NAN
        } else {
            sum / batches as f64
        };
    }
    Ok(TrainStats { steps, final_loss })
}

/// Top-1 accuracy.
pub fn evaluate(state: &ClassifierState, test: &[(&FeatureVector, u32)]) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut correct = 0usize;
    for (x, y) in test {
        if state.row_of(*y).is_none() {
            return Err(EvalError::Unobserved(*y));
        }
        if x.dim() != state.dim {
            return Err(EvalError::DimMismatch {
                expected: state.dim,
                found: x.dim(),
            });
        }
        correct += usize::from(state.predict(x) == *y);
    }
    Ok(correct as f64 / test.len() as f64)
}
