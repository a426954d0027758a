use super::boxes::Box3D;
use super::polygon::convex_intersection_area;

/// Intersection area of the two BEV footprints.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    convex_intersection_area(&a.footprint(), &b.footprint())
}

/// IoU of rotated BEV footprints.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    let union = a.l * a.w + b.l * b.w - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Volumetric IoU of yaw-rotated boxes (BEV overlap × vertical overlap).
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let dz = a.z_max().min(b.z_max()) - a.z_min().max(b.z_min());
    if dz <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
