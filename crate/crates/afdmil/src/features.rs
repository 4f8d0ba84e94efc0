//! Binary instance-feature blocks.
//!
//! Layout: magic `AFDF`, then little-endian `u32` format version, `u32` row
//! count `K`, `u32` column count `n`, then `K * n` little-endian `f32` values
//! in row-major order. Nothing may follow the payload.

use std::fs;
use std::path::Path;

use afdmil_core::numerics::Matrix;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AFDF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Serializes a feature block. Values are narrowed to `f32`.
pub fn encode(features: &Matrix) -> Result<Vec<u8>> {
    let (k, n) = features.shape();
    let (Ok(k32), Ok(n32)) = (u32::try_from(k), u32::try_from(n)) else {
        return Err(Error::Config(format!(
            "feature block {k}x{n} does not fit 32-bit counts"
        )));
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * k * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&k32.to_le_bytes());
    out.extend_from_slice(&n32.to_le_bytes());
    for &v in features.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses a feature block; the error string describes what is wrong.
pub fn decode(bytes: &[u8]) -> std::result::Result<Matrix, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(format!("bad magic {:?}, expected \"AFDF\"", &bytes[..4]));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(format!("unsupported feature format version {version}"));
    }
    let k = u32_at(bytes, 8) as usize;
    let n = u32_at(bytes, 12) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = k
        .checked_mul(n)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| format!("header K={k}, n={n} overflows"))?;
    if payload.len() != expected {
        return Err(format!(
            "header says K={k}, n={n} ({} floats) but the payload holds {} bytes",
            k * n,
            payload.len()
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Matrix::from_vec(k, n, data).map_err(|e| e.to_string())
}

pub fn write_features(path: &Path, features: &Matrix) -> Result<()> {
    let bytes = encode(features)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::format(path, msg))
}
