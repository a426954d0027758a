use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::polygon::ConvexPolygon2D;
use crate::error::{Error, Result};

/// Axis-aligned image box in continuous pixel coordinates.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidGeometry(format!(
                "2D box needs x_min < x_max and y_min < y_max, got {:?}",
                self.to_array()
            )));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed-interval membership.
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersection_area(&self, other: &Box2D) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        w.max(0.0) * h.max(0.0)
    }
}

/// Generalized IoU of two axis-aligned boxes, in (−1, 1].
pub fn giou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    let enclosing = (a.x_max.max(b.x_max) - a.x_min.min(b.x_min))
        * (a.y_max.max(b.y_max) - a.y_min.min(b.y_min));
    inter / union - (enclosing - union) / enclosing
}

impl Serialize for Box2D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Box2D {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x_min, y_min, x_max, y_max] = <[f64; 4]>::deserialize(deserializer)?;
        // Ordering is validated by the manifest loader so that the error
        // names the offending annotation.
        Ok(Box2D {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }
}

/// Maps an angle into (−π, π]. Values already in range are returned unchanged.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if yaw > -PI && yaw <= PI {
        return yaw;
    }
    let r = (yaw + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Oriented 3D box with yaw about the vertical axis.
///
/// `l` runs along the heading, `w` across it, `h` vertically. Serialized as
/// `[cx, cy, cz, l, w, h, yaw]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

/// Corner pairs forming the 12 edges, indexing into [`Box3D::corners`].
pub const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

impl Box3D {
    pub fn new(center: Vector3<f64>, l: f64, w: f64, h: f64, yaw: f64) -> Result<Self> {
        let b = Self {
            cx: center.x,
            cy: center.y,
            cz: center.z,
            l,
            w,
            h,
            yaw: normalize_yaw(yaw),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let arr = self.to_array();
        if arr.iter().any(|v| !v.is_finite()) || self.l <= 0.0 || self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "3D box needs finite values and positive extents, got {arr:?}"
            )));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::InvalidGeometry(format!(
                "yaw {} outside (-pi, pi]",
                self.yaw
            )));
        }
        Ok(())
    }

    pub fn from_array(a: [f64; 7]) -> Result<Self> {
        Self::new(Vector3::new(a[0], a[1], a[2]), a[3], a[4], a[5], a[6])
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw]
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(self.cx, self.cy, self.cz)
    }

    pub fn extents(&self) -> Vector3<f64> {
        Vector3::new(self.l, self.w, self.h)
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    pub fn z_min(&self) -> f64 {
        self.cz - 0.5 * self.h
    }

    pub fn z_max(&self) -> f64 {
        self.cz + 0.5 * self.h
    }

    /// Heading unit vector and its left-hand normal in the BEV plane.
    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = self.yaw.sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    }

    /// World point expressed in the box frame (origin at center, x along heading).
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.x - self.cx;
        let dy = p.y - self.cy;
        Vector3::new(c * dx + s * dy, -s * dx + c * dy, p.z - self.cz)
    }

    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector3::new(
            self.cx + c * local.x - s * local.y,
            self.cy + s * local.x + c * local.y,
            self.cz + local.z,
        )
    }

    /// The 8 corners. Indices 0..4 are the bottom face and 4..8 the top face;
    /// each face runs counter-clockwise (seen from above) starting at the
    /// front-left corner: (+l/2, +w/2), (−l/2, +w/2), (−l/2, −w/2), (+l/2, −w/2).
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (hl, hw, hh) = (0.5 * self.l, 0.5 * self.w, 0.5 * self.h);
        let signs = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
        let mut out = [Vector3::zeros(); 8];
        for (i, (sx, sy)) in signs.iter().enumerate() {
            out[i] = self.to_world(&Vector3::new(sx * hl, sy * hw, -hh));
            out[i + 4] = self.to_world(&Vector3::new(sx * hl, sy * hw, hh));
        }
        out
    }

    /// Counter-clockwise BEV rectangle.
    pub fn footprint(&self) -> ConvexPolygon2D {
        let c = self.corners();
        ConvexPolygon2D::from_ccw_unchecked(c[..4].iter().map(|p| Vector2::new(p.x, p.y)).collect())
    }

    pub fn contains(&self, p: &Vector3<f64>, slack: f64) -> bool {
        let q = self.to_local(p);
        q.x.abs() <= 0.5 * self.l + slack
            && q.y.abs() <= 0.5 * self.w + slack
            && q.z.abs() <= 0.5 * self.h + slack
    }

    /// Euclidean distance from `p` to the closed box; 0 inside.
    pub fn distance_outside(&self, p: &Vector3<f64>) -> f64 {
        let q = self.to_local(p);
        let dx = (q.x.abs() - 0.5 * self.l).max(0.0);
        let dy = (q.y.abs() - 0.5 * self.w).max(0.0);
        let dz = (q.z.abs() - 0.5 * self.h).max(0.0);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl Serialize for Box3D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Box3D {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 7]>::deserialize(deserializer)?;
        // Deserialization keeps yaw bit-exact; validation rejects out-of-range values.
        let b = Box3D {
            cx: a[0],
            cy: a[1],
            cz: a[2],
            l: a[3],
            w: a[4],
            h: a[5],
            yaw: a[6],
        };
        b.validate().map_err(serde::de::Error::custom)?;
        Ok(b)
    }
}
