use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Luma, Rgb};
use thiserror::Error;

use super::{BitEdgeMap, RgbImage};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("empty image")]
    Empty,
}

pub fn encode_png_rgb(img: &RgbImage) -> Vec<u8> {
    let buf = image::ImageBuffer::<Rgb<u8>, _>::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.pixels(),
    )
    .expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("png encoding into memory");
    out.into_inner()
}

/// Decodes any PNG and converts it to 8-bit RGB.
pub fn decode_png_rgb(bytes: &[u8]) -> Result<RgbImage, ImageIoError> {
    let dynamic = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let rgb = dynamic.into_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::from_raw(h as usize, w as usize, rgb.into_raw()).ok_or(ImageIoError::Empty)
}

pub fn load_png(path: &Path) -> Result<RgbImage, ImageIoError> {
    let bytes = std::fs::read(path).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_png_rgb(&bytes)
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<(), ImageIoError> {
    std::fs::write(path, encode_png_rgb(img)).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// 8-bit grayscale PNG with edge pixels at 255.
pub fn edges_to_png(e: &BitEdgeMap) -> Vec<u8> {
    let buf =
        image::ImageBuffer::<Luma<u8>, _>::from_fn(e.width() as u32, e.height() as u32, |x, y| {
            Luma([if e.get(y as usize, x as usize) {
                255
            } else {
                0
            }])
        });
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("png encoding into memory");
    out.into_inner()
}

/// Inverse of [`edges_to_png`]; any luma ≥ 128 counts as an edge.
pub fn png_to_edges(bytes: &[u8]) -> Result<BitEdgeMap, ImageIoError> {
    let luma = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_luma8();
    let (w, h) = luma.dimensions();
    if w == 0 || h == 0 {
        return Err(ImageIoError::Empty);
    }
    Ok(BitEdgeMap::from_fn(h as usize, w as usize, |y, x| {
        luma.get_pixel(x as u32, y as u32)[0] >= 128
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trips() {
        let img = RgbImage::from_fn(5, 7, |y, x| [(y * 40) as u8, (x * 30) as u8, 77]);
        assert_eq!(decode_png_rgb(&encode_png_rgb(&img)).unwrap(), img);
        let e = BitEdgeMap::from_fn(6, 11, |y, x| (x + y) % 3 == 0);
        assert_eq!(png_to_edges(&edges_to_png(&e)).unwrap(), e);
    }
}
