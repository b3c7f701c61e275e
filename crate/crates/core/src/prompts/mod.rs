//! Visual and textual prompt extraction.

mod dims;
mod labels;

pub use dims::{avg_area_ratio, capacity_per_unit, choose_gamma, target_dims, GammaPolicy};
pub use labels::{normalize_label, read_label_file, LabelError, LabelStyle, TextualPrompt};

use serde::{Deserialize, Serialize};

use crate::imaging::{
    canny_edges, resize_edges_nearest, resize_rgb, BitEdgeMap, CannyParams, ResizeMethod, RgbImage,
};

/// Order of the resize and edge-detection steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeScheme {
    /// Detect edges at the original size, then nearest-neighbor resize the map.
    EdgeFirst,
    /// Resize the image (Lanczos when enlarging, area otherwise), then detect edges.
    #[default]
    ImageFirst,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisualPrompt {
    pub edges: BitEdgeMap,
    pub orig_h: u32,
    pub orig_w: u32,
    pub scheme: ResizeScheme,
}

/// A stored stand-in for one exemplar image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptRecord {
    pub visual: VisualPrompt,
    pub textual: TextualPrompt,
    pub class_id: u32,
    pub source_id: String,
}

pub fn extract_visual_prompt(
    img: &RgbImage,
    gamma: u32,
    scheme: ResizeScheme,
    canny: CannyParams,
) -> VisualPrompt {
    let (h, w) = (img.height() as u32, img.width() as u32);
    let (th, tw) = target_dims(h, w, gamma);
    let (th, tw) = (th as usize, tw as usize);
    let edges = match scheme {
        ResizeScheme::EdgeFirst => resize_edges_nearest(&canny_edges(img, canny), th, tw),
        ResizeScheme::ImageFirst => {
            let method = if th * tw >= (h * w) as usize {
                ResizeMethod::Lanczos
            } else {
                ResizeMethod::Area
            };
            canny_edges(&resize_rgb(img, th, tw, method), canny)
        }
    };
    VisualPrompt {
        edges,
        orig_h: h,
        orig_w: w,
        scheme,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_image(h: usize, w: usize) -> RgbImage {
        RgbImage::from_fn(h, w, |_, x| if x < w / 2 { [0; 3] } else { [255; 3] })
    }

    #[test]
    fn constant_image_gives_empty_prompt() {
        let img = RgbImage::filled(100, 140, [30, 60, 90]);
        for scheme in [ResizeScheme::EdgeFirst, ResizeScheme::ImageFirst] {
            let p = extract_visual_prompt(&img, 256, scheme, CannyParams::default());
            assert_eq!((p.edges.height(), p.edges.width()), (256, 384));
            assert_eq!(p.edges.count_ones(), 0);
            assert_eq!((p.orig_h, p.orig_w), (100, 140));
        }
    }

    fn single_vertical_line(e: &BitEdgeMap) -> bool {
        let cols: std::collections::BTreeSet<usize> = e.ones().map(|(_, x)| x).collect();
        let rows: std::collections::BTreeSet<usize> = e.ones().map(|(y, _)| y).collect();
        cols.len() <= 2
            && cols.iter().max().unwrap() - cols.iter().min().unwrap() <= 1
            && rows.len() == e.height()
    }

    #[test]
    fn half_split_image_first_gives_one_column() {
        let img = split_image(289, 300);
        let p = extract_visual_prompt(&img, 256, ResizeScheme::ImageFirst, CannyParams::default());
        assert_eq!((p.edges.height(), p.edges.width()), (256, 256));
        let cols: std::collections::BTreeSet<usize> = p.edges.ones().map(|(_, x)| x).collect();
        assert_eq!(cols.len(), 1, "{cols:?}");
        assert_eq!(p.edges.count_ones(), 256);
    }

    #[test]
    fn half_split_edge_first_has_same_topology() {
        let img = split_image(289, 300);
        let p = extract_visual_prompt(&img, 256, ResizeScheme::EdgeFirst, CannyParams::default());
        assert_eq!((p.edges.height(), p.edges.width()), (256, 256));
        assert!(single_vertical_line(&p.edges));
    }
}
