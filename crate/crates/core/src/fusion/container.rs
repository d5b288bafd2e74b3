//! `SIQF` binary container: magic, version, height, width (u32 LE), then the
//! contrast and phase planes as row-major little-endian f32.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::FusedImages;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const FUSED_MAGIC: &[u8; 4] = b"SIQF";
pub const FUSED_VERSION: u32 = 1;

pub fn encode_fused(fused: &FusedImages) -> Vec<u8> {
    let (h, w) = fused.contrast.shape();
    let mut out = Vec::with_capacity(16 + 8 * h * w);
    out.extend_from_slice(FUSED_MAGIC);
    out.extend_from_slice(&FUSED_VERSION.to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    for plane in [&fused.contrast, &fused.phase] {
        for &v in plane.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_fused(bytes: &[u8]) -> Result<FusedImages> {
    let word = |k: usize| -> Result<u32> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| Error::invalid("truncated SIQF header"))
    };
    if bytes.len() < 16 || &bytes[..4] != FUSED_MAGIC {
        return Err(Error::invalid("not a SIQF container"));
    }
    let version = word(1)?;
    if version != FUSED_VERSION {
        return Err(Error::invalid(format!("unsupported SIQF version {version}")));
    }
    let (h, w) = (word(2)? as usize, word(3)? as usize);
    let n = h * w;
    if bytes.len() != 16 + 8 * n {
        return Err(Error::invalid(format!(
            "SIQF payload is {} bytes, expected {}",
            bytes.len() - 16,
            8 * n
        )));
    }
    let plane = |k: usize| -> Vec<f64> {
        bytes[16 + 4 * n * k..16 + 4 * n * (k + 1)]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    };
    Ok(FusedImages {
        contrast: Matrix::from_vec(h, w, plane(0))?,
        phase: Matrix::from_vec(h, w, plane(1))?,
    })
}

pub fn write_fused(fused: &FusedImages, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::io_util::write_atomic(path, |f| f.write_all(&encode_fused(fused)))
}

pub fn read_fused(path: impl AsRef<Path>) -> Result<FusedImages> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_fused(&bytes)
}
