//! JSON bodies of the generation service.
//!
//! ```text
//! POST /v1/generate  {edges_png, prompt, seed, height, width}
//!                 -> {image_png} | {error: {code, message}}
//! GET  /v1/health -> {backend_id}
//! ```
//!
//! PNG payloads are standard base64. Edge maps travel as 8-bit grayscale
//! PNGs with edge pixels at 255.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::imaging::{
    decode_png_rgb, edges_to_png, encode_png_rgb, png_to_edges, BitEdgeMap, RgbImage,
};

pub const GENERATE_PATH: &str = "/v1/generate";
pub const HEALTH_PATH: &str = "/v1/health";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequestBody {
    pub edges_png: String,
    pub prompt: String,
    pub seed: u64,
    pub height: u32,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponseBody {
    pub image_png: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthBody {
    pub backend_id: String,
}

/// Either a success or an error body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenerateReply {
    Ok(GenerateResponseBody),
    Err(ErrorBody),
}

impl GenerateRequestBody {
    pub fn new(edges: &BitEdgeMap, prompt: &str, seed: u64) -> Self {
        Self {
            edges_png: STANDARD.encode(edges_to_png(edges)),
            prompt: prompt.to_string(),
            seed,
            height: edges.height() as u32,
            width: edges.width() as u32,
        }
    }

    /// Decodes the edge map and checks it against the declared size.
    pub fn edges(&self) -> Result<BitEdgeMap, String> {
        let png = STANDARD
            .decode(&self.edges_png)
            .map_err(|e| format!("edges_png is not base64: {e}"))?;
        let edges = png_to_edges(&png).map_err(|e| format!("edges_png is not a PNG: {e}"))?;
        if (edges.height(), edges.width()) != (self.height as usize, self.width as usize) {
            return Err(format!(
                "edges_png is {}x{} but height/width say {}x{}",
                edges.height(),
                edges.width(),
                self.height,
                self.width
            ));
        }
        Ok(edges)
    }
}

impl GenerateResponseBody {
    pub fn new(img: &RgbImage) -> Self {
        Self {
            image_png: STANDARD.encode(encode_png_rgb(img)),
        }
    }

    pub fn image(&self) -> Result<RgbImage, String> {
        let png = STANDARD
            .decode(&self.image_png)
            .map_err(|e| format!("image_png is not base64: {e}"))?;
        decode_png_rgb(&png).map_err(|e| format!("image_png is not a PNG: {e}"))
    }
}

impl ErrorBody {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            error: ErrorDetail {
                code: code.into(),
                message: message.into(),
            },
        }
    }
}
