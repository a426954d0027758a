use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::boxes::{Box2D, Box3D, BOX_EDGES};
use super::pose::Pose;
use crate::error::{Error, Result};

/// Near clipping plane in meters along the optical axis.
pub const Z_NEAR: f64 = 1e-3;

/// Pinhole intrinsics; pixel origin at the top-left image corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.width > 0
            && self.height > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera intrinsics {self:?}")))
        }
    }
}

/// A posed pinhole camera. Camera frame is +z forward, +x right, +y down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub intrinsics: CameraIntrinsics,
    world_from_camera: Pose,
    camera_from_world: Pose,
}

impl CameraModel {
    pub fn new(intrinsics: CameraIntrinsics, world_from_camera: Pose) -> Result<Self> {
        intrinsics.validate()?;
        Ok(Self {
            intrinsics,
            world_from_camera,
            camera_from_world: world_from_camera.inverse(),
        })
    }

    pub fn world_from_camera(&self) -> &Pose {
        &self.world_from_camera
    }

    pub fn camera_from_world(&self) -> &Pose {
        &self.camera_from_world
    }

    pub fn center(&self) -> Vector3<f64> {
        self.world_from_camera.translation
    }

    pub fn width(&self) -> f64 {
        self.intrinsics.width as f64
    }

    pub fn height(&self) -> f64 {
        self.intrinsics.height as f64
    }

    #[inline]
    fn pixel_of(&self, pc: &Vector3<f64>) -> Vector2<f64> {
        let k = &self.intrinsics;
        Vector2::new(k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy)
    }

    /// Projects a point already in the camera frame; `None` at or behind the near plane.
    #[inline]
    pub fn project_camera_point(&self, pc: &Vector3<f64>) -> Option<Vector2<f64>> {
        if pc.z <= Z_NEAR {
            None
        } else {
            Some(self.pixel_of(pc))
        }
    }

    /// Pixel of a world point. Points outside the image are still returned;
    /// only points at or behind the near plane yield `None`.
    pub fn project_point(&self, p_world: &Vector3<f64>) -> Option<Vector2<f64>> {
        self.project_camera_point(&self.camera_from_world.apply(p_world))
    }

    /// Image-space points of the box after clipping its edges at the near plane.
    ///
    /// These are the vertices of the near-clipped box projected to the image,
    /// so their convex hull is the box silhouette.
    pub fn clipped_box_pixels(&self, b: &Box3D) -> Vec<Vector2<f64>> {
        let corners = b.corners().map(|c| self.camera_from_world.apply(&c));
        let mut pixels = Vec::with_capacity(24);
        for &(i, j) in BOX_EDGES.iter() {
            let (p, q) = (corners[i], corners[j]);
            let p_in = p.z >= Z_NEAR;
            let q_in = q.z >= Z_NEAR;
            match (p_in, q_in) {
                (true, true) => {
                    pixels.push(self.pixel_of(&p));
                    pixels.push(self.pixel_of(&q));
                }
                (true, false) | (false, true) => {
                    let (inside, outside) = if p_in { (p, q) } else { (q, p) };
                    let t = (inside.z - Z_NEAR) / (inside.z - outside.z);
                    let mut cut = inside + (outside - inside) * t;
                    cut.z = Z_NEAR;
                    pixels.push(self.pixel_of(&inside));
                    pixels.push(self.pixel_of(&cut));
                }
                (false, false) => {}
            }
        }
        pixels
    }

    /// Axis-aligned image box of a 3D box, clipped to the image rectangle.
    ///
    /// Edges are clipped against the near plane before projection so boxes
    /// that straddle the camera still produce sensible bounds. Returns `None`
    /// when nothing is in front of the camera or the bounds miss the image.
    pub fn project_box3d(&self, b: &Box3D) -> Option<Box2D> {
        let pixels = self.clipped_box_pixels(b);
        if pixels.is_empty() {
            return None;
        }
        let mut x_min = f64::INFINITY;
        let mut y_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for p in &pixels {
            x_min = x_min.min(p.x);
            y_min = y_min.min(p.y);
            x_max = x_max.max(p.x);
            y_max = y_max.max(p.y);
        }
        let x_min = x_min.max(0.0);
        let y_min = y_min.max(0.0);
        let x_max = x_max.min(self.width());
        let y_max = y_max.min(self.height());
        if x_min < x_max && y_min < y_max {
            Some(Box2D {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        } else {
            None
        }
    }
}
