//! PCA box fitting in bird's-eye view and the convex-hull shape check.

use crate::config::VerifyMetric;
use crate::error::{Error, Result};
use crate::geom::{convex_hull, convex_intersection_area, pca_2d, Box3D, Point2, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseFit {
    pub bbox: Box3D,
    /// At least one extent was raised to the floor.
    pub extents_clamped: bool,
}

/// Fits a box to a point set: BEV principal axes give the heading, the
/// midpoints of the per-axis min/max give the center, and the z range gives
/// height and vertical center. The heading is only defined modulo π.
pub fn fit_coarse_box(points: &[Point3], extent_floor: f64) -> Result<CoarseFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateSpread);
    }
    let bev: Vec<Point2> = points.iter().map(|p| p.xy()).collect();
    let (v1, v2) = pca_2d(&bev)?;
    let (mut a_lo, mut a_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut b_lo, mut b_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut z_lo, mut z_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let q = p.xy();
        let (a, b) = (q.dot(&v1), q.dot(&v2));
        a_lo = a_lo.min(a);
        a_hi = a_hi.max(a);
        b_lo = b_lo.min(b);
        b_hi = b_hi.max(b);
        z_lo = z_lo.min(p.z);
        z_hi = z_hi.max(p.z);
    }
    let c = v1 * (0.5 * (a_lo + a_hi)) + v2 * (0.5 * (b_lo + b_hi));
    let mut extents_clamped = false;
    let mut floor = |e: f64| {
        if e < extent_floor {
            extents_clamped = true;
            extent_floor
        } else {
            e
        }
    };
    let (l, w, h) = (floor(a_hi - a_lo), floor(b_hi - b_lo), floor(z_hi - z_lo));
    let bbox = Box3D::new(Point3::new(c.x, c.y, 0.5 * (z_lo + z_hi)), l, w, h, v1.y.atan2(v1.x))?;
    Ok(CoarseFit { bbox, extents_clamped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseBoxResult {
    pub bbox: Box3D,
    pub hull_iou: f64,
    pub verified: bool,
    pub extents_clamped: bool,
}

/// Shape consistency between the box footprint and the convex hull of the
/// BEV points. Accepts when the score exceeds `tau_iou`.
pub fn verify_geometry(
    fit: &CoarseFit,
    bev_points: &[Point2],
    tau_iou: f64,
    metric: VerifyMetric,
) -> Result<CoarseBoxResult> {
    let hull = convex_hull(bev_points)?;
    let footprint = fit.bbox.footprint();
    let inter = convex_intersection_area(&footprint, &hull);
    let (fa, ha) = (footprint.area(), hull.area());
    let score = match metric {
        VerifyMetric::Iou => inter / (fa + ha - inter),
        VerifyMetric::HullCoverage => inter / ha,
    };
    let hull_iou = score.clamp(0.0, 1.0);
    Ok(CoarseBoxResult {
        bbox: fit.bbox,
        hull_iou,
        verified: hull_iou > tau_iou,
        extents_clamped: fit.extents_clamped,
    })
}
