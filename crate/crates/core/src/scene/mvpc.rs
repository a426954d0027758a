//! `.mvpc` point cloud files: `"MVPC"`, `u16` version (1), `u32` point
//! count, then `count × (x, y, z)` as little-endian `f32`.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MVPC";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4;

pub fn encode(points: &[Vector3<f64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + points.len() * 12);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    for p in points {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parses an in-memory `.mvpc` image; `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &str) -> Result<Vec<Vector3<f64>>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::parse(origin, "not an MVPC file (bad magic)"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::parse(origin, format!("unsupported MVPC version {version}")));
    }
    let count = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 12 {
        return Err(Error::parse(
            origin,
            format!("header declares {count} points but body holds {} bytes", body.len()),
        ));
    }
    let f = |c: &[u8]| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
    Ok(body
        .chunks_exact(12)
        .map(|c| Vector3::new(f(&c[0..4]), f(&c[4..8]), f(&c[8..12])))
        .collect())
}

pub fn read(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

pub fn write(path: &Path, points: &[Vector3<f64>]) -> Result<()> {
    super::write_atomic(path, &encode(points))
}

/// Rounds each coordinate to the nearest `f32`, the precision the file stores.
pub fn quantize(p: Vector3<f64>) -> Vector3<f64> {
    p.map(|v| v as f32 as f64)
}
