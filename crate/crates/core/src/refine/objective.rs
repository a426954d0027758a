use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ObjectTrack;
use crate::geom::{giou_2d, Box2D, Box3D, CameraModel, Point3};

/// 1 − GIoU never exceeds 2; a box that does not project at all gets that bound.
pub const MISSING_PROJECTION_PENALTY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub lambda_2d: f64,
    pub mu_fit: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            lambda_2d: 0.5,
            mu_fit: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_2d >= 0.0 && self.mu_fit >= 0.0 && self.lambda_2d.is_finite() && self.mu_fit.is_finite() {
            Ok(())
        } else {
            Err(Error::Config("objective weights must be finite and non-negative".into()))
        }
    }
}

/// 2D loss term of one view.
pub fn l2d_term(b: &Box3D, camera: &CameraModel, gt: &Box2D) -> f64 {
    match camera.project_box3d(b) {
        Some(pred) => 1.0 - giou_2d(&pred, gt),
        None => MISSING_PROJECTION_PENALTY,
    }
}

/// Mean 2D loss over the given `(camera, annotated box)` views; 0 when there
/// are none.
pub fn l2d_views<'a>(b: &Box3D, views: impl IntoIterator<Item = (&'a CameraModel, &'a Box2D)>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (camera, gt) in views {
        sum += l2d_term(b, camera, gt);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean 2D loss over every annotated frame of a track, each frame weighted
/// equally.
pub fn l2d_multiview(b: &Box3D, track: &ObjectTrack) -> f64 {
    l2d_views(b, track.observations.iter().map(|o| (&o.camera, &o.annotation.bbox)))
}

/// Geometric fit of a box to points.
///
/// The first part is the mean distance of points outside the box, over the
/// box diagonal. The second is the mean, over the three box axes, of the
/// unused extent `(extent − spanned)₊ / extent`, where `spanned` is the
/// extent of the points along that axis. A box that exactly spans the
/// points scores 0.
pub fn l_fit(b: &Box3D, points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let diag = b.diagonal();
    let mut outside = 0.0;
    let mut lo = Point3::repeat(f64::INFINITY);
    let mut hi = Point3::repeat(f64::NEG_INFINITY);
    for p in points {
        outside += b.distance_outside(p);
        let q = b.to_local(p);
        lo = lo.inf(&q);
        hi = hi.sup(&q);
    }
    let outside = outside / points.len() as f64 / diag;
    let ext = b.extents();
    let spanned = hi - lo;
    let slack: f64 = (0..3).map(|k| (ext[k] - spanned[k]).max(0.0) / ext[k]).sum::<f64>() / 3.0;
    outside + slack
}

/// `J = mu_fit · l_fit + lambda_2d · l2d`. A zero weight skips its term.
pub fn objective<'a>(
    b: &Box3D,
    points: &[Point3],
    views: &[(&'a CameraModel, &'a Box2D)],
    weights: &ObjectiveWeights,
) -> f64 {
    let mut j = 0.0;
    if weights.mu_fit != 0.0 {
        j += weights.mu_fit * l_fit(b, points);
    }
    if weights.lambda_2d != 0.0 {
        j += weights.lambda_2d * l2d_views(b, views.iter().copied());
    }
    j
}
