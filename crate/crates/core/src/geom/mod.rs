//! Geometry kernels shared by every pipeline stage.
//!
//! All quantities are `f64`. World, ego and box frames are z-up; camera
//! frames are z-forward, x-right, y-down with the pixel origin at the
//! top-left image corner.

mod boxes;
mod camera;
mod iou;
mod pca;
mod polygon;
mod pose;

pub use boxes::{giou_2d, normalize_yaw, Box2D, Box3D, BOX_EDGES};
pub use camera::{CameraIntrinsics, CameraModel, Z_NEAR};
pub use iou::{bev_intersection_area, bev_iou, iou_3d};
pub use pca::pca_2d;
pub use polygon::{convex_hull, convex_intersection_area, signed_area, ConvexPolygon2D};
pub use pose::Pose;

pub type Point2 = nalgebra::Vector2<f64>;
pub type Point3 = nalgebra::Vector3<f64>;

/// Free-function form of [`CameraModel::project_point`].
pub fn project_point(camera: &CameraModel, p_world: &Point3) -> Option<Point2> {
    camera.project_point(p_world)
}

/// Free-function form of [`CameraModel::project_box3d`].
pub fn project_box3d(camera: &CameraModel, b: &Box3D) -> Option<Box2D> {
    camera.project_box3d(b)
}

/// Free-function form of [`Box3D::corners`].
pub fn box3d_corners(b: &Box3D) -> [Point3; 8] {
    b.corners()
}
