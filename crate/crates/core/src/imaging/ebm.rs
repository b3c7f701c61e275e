//! `EBM1` container: a packed edge map plus the original image size.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "EBM1" | H: u32 | W: u32 | orig_h: u32 | orig_w: u32 | H * ceil(W/8) packed bytes
//! ```

use thiserror::Error;

use super::BitEdgeMap;

pub const EBM_MAGIC: [u8; 4] = *b"EBM1";
pub const EBM_HEADER_LEN: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EbmError {
    #[error("bad magic {0:02x?}, expected \"EBM1\"")]
    BadMagic([u8; 4]),
    #[error("truncated container: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("zero dimension in header")]
    ZeroDimension,
    #[error("padding bit set in row {row}")]
    NonZeroPadding { row: usize },
}

pub fn encode_ebm(e: &BitEdgeMap, orig_h: u32, orig_w: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(EBM_HEADER_LEN + e.packed().len());
    out.extend_from_slice(&EBM_MAGIC);
    for v in [e.height() as u32, e.width() as u32, orig_h, orig_w] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(e.packed());
    out
}

pub fn decode_ebm(bytes: &[u8]) -> Result<(BitEdgeMap, u32, u32), EbmError> {
    if bytes.len() < EBM_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != EBM_MAGIC {
            return Err(EbmError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(EbmError::Truncated {
            need: EBM_HEADER_LEN,
            have: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != EBM_MAGIC {
        return Err(EbmError::BadMagic(magic));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (h, w, orig_h, orig_w) = (word(0) as usize, word(1) as usize, word(2), word(3));
    if h == 0 || w == 0 || orig_h == 0 || orig_w == 0 {
        return Err(EbmError::ZeroDimension);
    }
    let bpr = w.div_ceil(8);
    let need = h
        .checked_mul(bpr)
        .and_then(|n| n.checked_add(EBM_HEADER_LEN))
        .ok_or(EbmError::Truncated {
            need: usize::MAX,
            have: bytes.len(),
        })?;
    if bytes.len() < need {
        return Err(EbmError::Truncated {
            need,
            have: bytes.len(),
        });
    }
    if bytes.len() > need {
        return Err(EbmError::TrailingBytes(bytes.len() - need));
    }
    let payload = &bytes[EBM_HEADER_LEN..];
    if w % 8 != 0 {
        let pad_mask = 0xFFu8 >> (w % 8);
        if let Some(row) = (0..h).find(|r| payload[r * bpr + bpr - 1] & pad_mask != 0) {
            return Err(EbmError::NonZeroPadding { row });
        }
    }
    let map = BitEdgeMap::from_packed(h, w, payload.to_vec()).expect("validated above");
    Ok((map, orig_h, orig_w))
}
