//! Convex polygons in the plane: monotone-chain hull and
//! Sutherland–Hodgman intersection.

use nalgebra::Vector2;

use crate::error::{Error, Result};

const DUPLICATE_TOL: f64 = 1e-9;

#[inline]
fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Vector2<f64>]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Counter-clockwise convex polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon2D {
    vertices: Vec<Vector2<f64>>,
}

impl ConvexPolygon2D {
    /// Wraps vertices the caller guarantees to be convex and counter-clockwise.
    pub fn from_ccw_unchecked(vertices: Vec<Vector2<f64>>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).max(0.0)
    }

    /// Point-in-polygon with a distance slack (boundary counts as inside).
    pub fn contains(&self, p: &Vector2<f64>, slack: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            let len = (b - a).norm();
            cross(a, b, p) >= -slack * len
        })
    }

    /// True when every turn is non-negative and no consecutive vertices coincide.
    pub fn is_convex_ccw(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = &v[i];
            let b = &v[(i + 1) % n];
            let c = &v[(i + 2) % n];
            (b - a).norm() > DUPLICATE_TOL && cross(a, b, c) >= 0.0
        })
    }
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
pub fn convex_hull(points: &[Vector2<f64>]) -> Result<ConvexPolygon2D> {
    let mut pts: Vec<Vector2<f64>> = points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()).copied().collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();

    // near-duplicates that survived the exact dedup
    let mut ring: Vec<Vector2<f64>> = Vec::with_capacity(hull.len());
    for p in hull {
        if ring.last().is_none_or(|q: &Vector2<f64>| (p - q).norm() > DUPLICATE_TOL) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && (ring[0] - ring[ring.len() - 1]).norm() <= DUPLICATE_TOL {
        ring.pop();
    }
    if ring.len() < 3 || signed_area(&ring) <= 0.0 {
        return Err(Error::DegenerateHull);
    }
    Ok(ConvexPolygon2D { vertices: ring })
}

/// Clips `subject` to the left half-plane of the directed edge a→b.
fn clip_half_plane(subject: &[Vector2<f64>], a: &Vector2<f64>, b: &Vector2<f64>) -> Vec<Vector2<f64>> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let s = subject[i];
        let e = subject[(i + 1) % n];
        let sd = cross(a, b, &s);
        let ed = cross(a, b, &e);
        let s_in = sd >= 0.0;
        let e_in = ed >= 0.0;
        if s_in != e_in {
            let denom = sd - ed;
            if denom.abs() > 1e-300 {
                let t = sd / denom;
                out.push(s + (e - s) * t);
            }
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Area of the intersection of two counter-clockwise convex polygons.
pub fn convex_intersection_area(a: &ConvexPolygon2D, b: &ConvexPolygon2D) -> f64 {
    let clip = b.vertices();
    let mut ring = a.vertices().to_vec();
    if ring.len() < 3 || clip.len() < 3 {
        return 0.0;
    }
    for i in 0..clip.len() {
        ring = clip_half_plane(&ring, &clip[i], &clip[(i + 1) % clip.len()]);
        if ring.len() < 3 {
            return 0.0;
        }
    }
    signed_area(&ring).max(0.0)
}
