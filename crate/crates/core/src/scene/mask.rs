use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ConvexPolygon2D;

/// Run-length encoded binary mask over a row-major bitmap.
///
/// Runs alternate starting with a run of `false` pixels (which may be 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mask {
    pub rle: Vec<u32>,
    pub width: u32,
    pub height: u32,
}

/// Decoded mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        col < self.width && row < self.height && self.bits[row as usize * self.width as usize + col as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, value: bool) {
        let w = self.width as usize;
        self.bits[row as usize * w + col as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Membership of a continuous pixel coordinate via integer floor.
    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        if !(pixel.x >= 0.0 && pixel.y >= 0.0) {
            return false;
        }
        let (col, row) = (pixel.x.floor(), pixel.y.floor());
        if col >= self.width as f64 || row >= self.height as f64 {
            return false;
        }
        self.get(col as u32, row as u32)
    }

    pub fn encode(&self) -> Mask {
        let mut rle = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in &self.bits {
            if b == current {
                run += 1;
            } else {
                rle.push(run);
                current = b;
                run = 1;
            }
        }
        rle.push(run);
        Mask {
            rle,
            width: self.width,
            height: self.height,
        }
    }

    /// Rasterizes a convex polygon conservatively: a pixel is set when its
    /// unit square overlaps the polygon, so every point inside the polygon
    /// floors to a set pixel. Returns the number of pixels that changed.
    pub fn fill_convex(&mut self, poly: &ConvexPolygon2D) -> usize {
        self.paint_convex(poly, true)
    }

    /// Clears the pixels [`Bitmap::fill_convex`] would set. Returns the
    /// number of pixels that changed.
    pub fn clear_convex(&mut self, poly: &ConvexPolygon2D) -> usize {
        self.paint_convex(poly, false)
    }

    fn paint_convex(&mut self, poly: &ConvexPolygon2D, value: bool) -> usize {
        let mut changed = 0;
        let verts = poly.vertices();
        if verts.len() < 3 {
            return 0;
        }
        let n = verts.len();
        let y_lo = verts.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        let y_hi = verts.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
        let row_start = y_lo.floor().max(0.0) as i64;
        let row_end = (y_hi.floor() as i64).min(self.height as i64 - 1);
        for row in row_start..=row_end {
            let (s0, s1) = (row as f64, row as f64 + 1.0);
            // x-range of the polygon restricted to the slab s0 <= y <= s1
            let mut x_lo = f64::INFINITY;
            let mut x_hi = f64::NEG_INFINITY;
            for i in 0..n {
                let a = verts[i];
                let b = verts[(i + 1) % n];
                if a.y >= s0 && a.y <= s1 {
                    x_lo = x_lo.min(a.x);
                    x_hi = x_hi.max(a.x);
                }
                for s in [s0, s1] {
                    if (a.y - s) * (b.y - s) < 0.0 {
                        let t = (s - a.y) / (b.y - a.y);
                        let x = a.x + t * (b.x - a.x);
                        x_lo = x_lo.min(x);
                        x_hi = x_hi.max(x);
                    }
                }
            }
            if x_lo > x_hi {
                continue;
            }
            let c0 = x_lo.floor().max(0.0) as i64;
            let c1 = (x_hi.floor() as i64).min(self.width as i64 - 1);
            let base = row as usize * self.width as usize;
            for col in c0..=c1 {
                let px = &mut self.bits[base + col as usize];
                if *px != value {
                    *px = value;
                    changed += 1;
                }
            }
        }
        changed
    }
}

/// Pixel lookups straight from the run lengths, without expanding the bitmap.
#[derive(Debug, Clone)]
pub struct MaskLookup {
    width: u32,
    height: u32,
    /// Exclusive end offset of each run.
    ends: Vec<u64>,
}

impl MaskLookup {
    pub fn new(mask: &Mask) -> Result<Self> {
        let mut ends = Vec::with_capacity(mask.rle.len());
        let mut acc = 0u64;
        for &r in &mask.rle {
            acc += r as u64;
            ends.push(acc);
        }
        let total = mask.width as u64 * mask.height as u64;
        if acc != total {
            return Err(Error::Mask(format!(
                "run lengths sum to {acc}, expected {}x{} = {total}",
                mask.width, mask.height
            )));
        }
        Ok(Self {
            width: mask.width,
            height: mask.height,
            ends,
        })
    }

    /// Same semantics as [`Bitmap::contains`].
    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        if !(pixel.x >= 0.0 && pixel.y >= 0.0) {
            return false;
        }
        let (col, row) = (pixel.x.floor(), pixel.y.floor());
        if col >= self.width as f64 || row >= self.height as f64 {
            return false;
        }
        let offset = row as u64 * self.width as u64 + col as u64;
        let run = self.ends.partition_point(|&e| e <= offset);
        run % 2 == 1
    }
}

/// Expands the run lengths. Fails when they do not cover `width × height`.
pub fn decode_mask(mask: &Mask) -> Result<Bitmap> {
    let total = mask.width as u64 * mask.height as u64;
    let sum: u64 = mask.rle.iter().map(|&r| r as u64).sum();
    if sum != total {
        return Err(Error::Mask(format!(
            "run lengths sum to {sum}, expected {}x{} = {total}",
            mask.width, mask.height
        )));
    }
    let mut bits = Vec::with_capacity(total as usize);
    let mut value = false;
    for &run in &mask.rle {
        bits.extend(std::iter::repeat_n(value, run as usize));
        value = !value;
    }
    Ok(Bitmap {
        width: mask.width,
        height: mask.height,
        bits,
    })
}

pub fn point_in_mask(mask: &Mask, pixel: &Vector2<f64>) -> Result<bool> {
    Ok(decode_mask(mask)?.contains(pixel))
}
