//! Browser bindings. Images cross the boundary as RGBA byte arrays (the
//! layout of `ImageData`), row-major.

use edgemem::harness::procedural_dataset;
use edgemem::imaging::{canny_edges, BitEdgeMap, CannyParams, RgbImage};
use edgemem::memory::allocate;
use edgemem::prompts::{
    capacity_per_unit, extract_visual_prompt, normalize_label, target_dims, LabelStyle,
    ResizeScheme, TextualPrompt,
};
use edgemem::regen::stub_generate;
use wasm_bindgen::prelude::*;

fn rgba_to_rgb(rgba: &[u8], width: usize, height: usize) -> Result<RgbImage, String> {
    if width == 0 || height == 0 || rgba.len() != width * height * 4 {
        return Err(format!(
            "expected {}x{} RGBA ({} bytes), got {} bytes",
            width,
            height,
            width * height * 4,
            rgba.len()
        ));
    }
    let rgb = rgba
        .chunks_exact(4)
        .flat_map(|p| [p[0], p[1], p[2]])
        .collect();
    RgbImage::from_raw(height, width, rgb).ok_or_else(|| "bad image".into())
}

fn rgb_to_rgba(img: &RgbImage) -> Vec<u8> {
    img.pixels()
        .chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect()
}

fn edges_to_rgba(e: &BitEdgeMap) -> Vec<u8> {
    (0..e.height())
        .flat_map(|y| (0..e.width()).map(move |x| (y, x)))
        .flat_map(|(y, x)| {
            if e.get(y, x) {
                [255; 4]
            } else {
                [0, 0, 0, 255]
            }
        })
        .collect()
}

/// A polygon image from the procedural dataset.
pub fn sample_image(class_id: u32, seed: u64, size: usize) -> Result<RgbImage, String> {
    if class_id >= 10 {
        return Err("class must be 0..9".into());
    }
    if !(16..=256).contains(&size) {
        return Err("size must be 16..256".into());
    }
    let data = procedural_dataset(10, 2, size, seed);
    let s = data
        .train
        .into_iter()
        .find(|s| s.class_id == class_id)
        .expect("every class has a training image");
    Ok(s.image)
}

pub fn edges_of(img: &RgbImage, low: f32, high: f32) -> Result<BitEdgeMap, String> {
    if !(0.0 <= low && low <= high) {
        return Err("thresholds must satisfy 0 <= low <= high".into());
    }
    Ok(canny_edges(img, CannyParams::new(low, high)))
}

fn style(s: &str) -> Result<LabelStyle, String> {
    s.parse()
}

/// Edge map and stub regeneration of `img` for a raw class name.
pub fn regenerate(
    img: &RgbImage,
    raw_label: &str,
    label_style: &str,
    seed: u64,
) -> Result<(TextualPrompt, BitEdgeMap, RgbImage), String> {
    let text = normalize_label(raw_label, style(label_style)?).map_err(|e| e.to_string())?;
    let visual = extract_visual_prompt(img, 64, ResizeScheme::ImageFirst, CannyParams::default());
    let out = stub_generate(&visual.edges, &text, seed);
    Ok((text, visual.edges, out))
}

/// Ledger and payload figures for one budget setting, as JSON.
pub fn budget_json(
    units: u32,
    alpha: f64,
    height: u32,
    width: u32,
    gamma: u32,
) -> Result<String, String> {
    if gamma == 0 || !gamma.is_multiple_of(64) {
        return Err("gamma must be a positive multiple of 64".into());
    }
    if height == 0 || width == 0 {
        return Err("image sides must be positive".into());
    }
    let (th, tw) = target_dims(height, width, gamma);
    let ratio = f64::from(th) * f64::from(tw) / (f64::from(height) * f64::from(width));
    let capacity = capacity_per_unit(ratio);
    let ledger = allocate(units, alpha, capacity).map_err(|e| e.to_string())?;
    Ok(serde_json::json!({
        "target": [th, tw],
        "area_ratio": ratio,
        "capacity_per_unit": capacity,
        "real": ledger.real_slots,
        "prompts": ledger.synthetic_slots,
        "rgb_bytes": u64::from(height) * u64::from(width) * 3,
        "edge_bytes": u64::from(th) * u64::from(tw).div_ceil(8),
    })
    .to_string())
}

#[wasm_bindgen]
pub struct Regeneration {
    text: String,
    edges: Vec<u8>,
    image: Vec<u8>,
    width: usize,
    height: usize,
}

#[wasm_bindgen]
impl Regeneration {
    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.text.clone()
    }

    /// Edge map, RGBA.
    #[wasm_bindgen(getter)]
    pub fn edges(&self) -> Vec<u8> {
        self.edges.clone()
    }

    /// Regenerated image, RGBA.
    #[wasm_bindgen(getter)]
    pub fn image(&self) -> Vec<u8> {
        self.image.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }
}

#[wasm_bindgen(js_name = sampleImage)]
pub fn js_sample_image(class_id: u32, seed: u32, size: usize) -> Result<Vec<u8>, JsError> {
    let img = sample_image(class_id, u64::from(seed), size).map_err(|e| JsError::new(&e))?;
    Ok(rgb_to_rgba(&img))
}

#[wasm_bindgen(js_name = cannyEdges)]
pub fn js_canny_edges(
    rgba: &[u8],
    width: usize,
    height: usize,
    low: f32,
    high: f32,
) -> Result<Vec<u8>, JsError> {
    let img = rgba_to_rgb(rgba, width, height).map_err(|e| JsError::new(&e))?;
    let e = edges_of(&img, low, high).map_err(|e| JsError::new(&e))?;
    Ok(edges_to_rgba(&e))
}

#[wasm_bindgen(js_name = regenerate)]
pub fn js_regenerate(
    rgba: &[u8],
    width: usize,
    height: usize,
    raw_label: &str,
    label_style: &str,
    seed: u32,
) -> Result<Regeneration, JsError> {
    let img = rgba_to_rgb(rgba, width, height).map_err(|e| JsError::new(&e))?;
    let (text, edges, out) =
        regenerate(&img, raw_label, label_style, u64::from(seed)).map_err(|e| JsError::new(&e))?;
    Ok(Regeneration {
        text: text.as_str().to_string(),
        edges: edges_to_rgba(&edges),
        image: rgb_to_rgba(&out),
        width: out.width(),
        height: out.height(),
    })
}

#[wasm_bindgen(js_name = budget)]
pub fn js_budget(
    units: u32,
    alpha: f64,
    height: u32,
    width: u32,
    gamma: u32,
) -> Result<String, JsError> {
    budget_json(units, alpha, height, width, gamma).map_err(|e| JsError::new(&e))
}
