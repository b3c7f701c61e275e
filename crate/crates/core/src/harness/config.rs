use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Protocol;
use crate::imaging::CannyParams;
use crate::prompts::ResizeScheme;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    #[default]
    Stub,
    Remote {
        endpoint: String,
    },
}

fn default_epochs() -> usize {
    60
}
fn default_lr() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_gamma() -> u32 {
    64
}
fn default_image_size() -> usize {
    64
}

/// One experiment, as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    /// `N`: incremental phases (LFH) or total phases (LFS).
    pub phases: usize,
    pub classes: usize,
    pub samples_per_class: usize,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    /// `b`: memory units per class.
    pub units_per_class: u32,
    /// `α`: share of the budget spent on edge-map prompts.
    pub alpha: f64,
    /// `p`: per-epoch replacement probability.
    pub p: f64,
    /// `K`: generated copies per image.
    pub copies: usize,
    #[serde(default = "default_epochs")]
    pub epochs_first: usize,
    #[serde(default = "default_epochs")]
    pub epochs_later: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_true")]
    pub augment_exemplars: bool,
    /// Short-side target for visual prompts.
    #[serde(default = "default_gamma")]
    pub gamma: u32,
    #[serde(default)]
    pub scheme: ResizeScheme,
    #[serde(default)]
    pub canny: CannyParams,
    /// Edge maps per memory unit; derived from image sizes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    pub dataset_seed: u64,
    pub experiment_seed: u64,
    #[serde(default)]
    pub backend: BackendConfig,
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.classes < 2 {
            return Err(invalid("classes", "need at least 2 classes"));
        }
        if self.phases == 0 {
            return Err(invalid("phases", "need at least 1 phase"));
        }
        if self.samples_per_class < 2 {
            return Err(invalid(
                "samples_per_class",
                "need at least 2 samples per class",
            ));
        }
        if self.image_size < 16 {
            return Err(invalid("image_size", "images must be at least 16 pixels"));
        }
        if self.units_per_class == 0 {
            return Err(invalid(
                "units_per_class",
                "need at least 1 memory unit per class",
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(
                "alpha",
                format!("{} is outside [0, 1]", self.alpha),
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid("p", format!("{} is outside [0, 1]", self.p)));
        }
        if self.copies == 0 && (self.p > 0.0 || self.alpha > 0.0) {
            return Err(invalid(
                "copies",
                "must be at least 1 when p > 0 or alpha > 0",
            ));
        }
        if self.epochs_first == 0 || self.epochs_later == 0 {
            return Err(invalid("epochs_first", "epoch counts must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning_rate", "must be finite and non-negative"));
        }
        if self.gamma == 0 || !self.gamma.is_multiple_of(64) {
            return Err(invalid(
                "gamma",
                format!("{} is not a positive multiple of 64", self.gamma),
            ));
        }
        if self.canny.low > self.canny.high {
            return Err(invalid("canny", "low threshold exceeds high threshold"));
        }
        if let Some(c) = self.capacity {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("capacity", "must be positive"));
            }
        }
        if let BackendConfig::Remote { endpoint } = &self.backend {
            if !endpoint.starts_with("http://") && !endpoint.starts_with("https://") {
                return Err(invalid(
                    "backend",
                    format!("endpoint {endpoint:?} is not an http(s) URL"),
                ));
            }
        }
        Ok(())
    }
}
