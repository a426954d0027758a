//! Synthetic driving scenes with known 3D boxes.
//!
//! An ego vehicle drives along a constant-turn-rate path past parked and
//! moving objects. Each frame samples LiDAR-like points on the sensor-facing
//! surface of each object (box faces, or an elliptic cylinder inscribed in the
//! box for rounded classes), jitters them with isotropic Gaussian noise and
//! stores them in the ego frame. Objects in view of a camera get a 2D box
//! (the projection of their true 3D box) and a mask (the rasterized
//! silhouette). A small fraction of points "bleeds" through the mask: they
//! sit on the camera ray of a surface point but well behind the object, the
//! way background returns leak into a misaligned camera mask.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{
    mvpc, Annotation2D, Bitmap, CameraRig, Frame, GeneratorInfo, GroundTruth, GtPointLabels, GtTrack, Scene,
};
use crate::error::{Error, Result};
use crate::geom::{convex_hull, Box3D, CameraIntrinsics, CameraModel, Pose};

/// Face order used in [`GtPointLabels::face`].
pub const FACE_NAMES: [&str; 6] = ["front", "back", "left", "right", "top", "bottom"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Optical-axis heading relative to the vehicle, degrees (left positive).
    pub yaw_deg: f64,
    /// Mount position in the ego frame, meters.
    pub translation: [f64; 3],
}

impl CameraSpec {
    fn nuscenes_like(id: &str, yaw_deg: f64) -> Self {
        Self {
            id: id.to_string(),
            fx: 1266.0,
            fy: 1266.0,
            cx: 800.0,
            cy: 450.0,
            width: 1600,
            height: 900,
            yaw_deg,
            translation: [1.5, 0.0, 1.9],
        }
    }

    fn rig(&self) -> Result<CameraRig> {
        let k = CameraIntrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        };
        k.validate()?;
        let t = Vector3::from(self.translation);
        Ok(CameraRig::new(k, Pose::camera_mount(self.yaw_deg.to_radians(), t)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EgoTrajectory {
    /// Start pose `[x, y, yaw]` (meters, meters, radians).
    pub start: [f64; 3],
    pub speed: f64,
    pub yaw_rate: f64,
}

impl Default for EgoTrajectory {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0, 0.0],
            speed: 5.0,
            yaw_rate: 0.0,
        }
    }
}

impl EgoTrajectory {
    pub fn pose_at(&self, t: f64) -> Pose {
        let [x0, y0, yaw0] = self.start;
        let (x, y, yaw) = if self.yaw_rate.abs() < 1e-12 {
            (x0 + self.speed * t * yaw0.cos(), y0 + self.speed * t * yaw0.sin(), yaw0)
        } else {
            let yaw = yaw0 + self.yaw_rate * t;
            let r = self.speed / self.yaw_rate;
            (x0 + r * (yaw.sin() - yaw0.sin()), y0 - r * (yaw.cos() - yaw0.cos()), yaw)
        };
        Pose::from_yaw(yaw, Vector3::new(x, y, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectClassSpec {
    pub class: String,
    pub count: usize,
    pub length: [f64; 2],
    pub width: [f64; 2],
    pub height: [f64; 2],
    /// Expected surface points per m² of sensor-facing face per frame.
    pub density: f64,
    /// Speed range for moving instances, m/s. `[0, 0]` keeps the class static.
    pub speed: [f64; 2],
    #[serde(default)]
    pub shape: SurfaceShape,
}

/// Surface the LiDAR points are drawn from. Both fill the object's box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceShape {
    #[default]
    Box,
    /// Elliptic cylinder with semi-axes `l/2`, `w/2` and a flat top.
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub scene_id: String,
    pub seed: u64,
    pub n_frames: usize,
    pub frame_dt: f64,
    pub cameras: Vec<CameraSpec>,
    pub ego: EgoTrajectory,
    /// LiDAR position in the ego frame (origin on the ground).
    pub sensor_mount: [f64; 3],
    pub max_range: f64,
    pub objects: Vec<ObjectClassSpec>,
    pub static_fraction: f64,
    /// Standard deviation of the per-axis Gaussian point jitter, meters.
    pub noise_sigma: f64,
    /// Probability that a surface point spawns a bleed outlier.
    pub bleed_fraction: f64,
    /// Distance range behind the far side of the box for bleed outliers.
    pub bleed_offset: [f64; 2],
    /// Lateral offset range of parked objects from the ego path.
    pub static_lateral: [f64; 2],
    /// Lateral offset range of moving objects from the ego path.
    pub moving_lateral: [f64; 2],
    /// Placement range along the ego path.
    pub longitudinal: [f64; 2],
    /// Uniform heading noise around the road direction, degrees.
    pub yaw_jitter_deg: f64,
    pub min_box_area_px: f64,
    /// Minimum camera-frame depth of the object center for an annotation.
    pub min_annotation_depth: f64,
    /// Minimum share of the silhouette not hidden by nearer objects.
    pub min_visible_fraction: f64,
    /// Annotate objects whose silhouette is cut by the image border.
    pub allow_truncated: bool,
    pub emit_masks: bool,
    pub mask_confidence: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scene_id: "synthetic".to_string(),
            seed: 0,
            n_frames: 20,
            frame_dt: 0.5,
            cameras: vec![
                CameraSpec::nuscenes_like("front", 0.0),
                CameraSpec::nuscenes_like("front_left", 50.0),
                CameraSpec::nuscenes_like("front_right", -50.0),
            ],
            ego: EgoTrajectory::default(),
            sensor_mount: [1.5, 0.0, 1.9],
            max_range: 60.0,
            objects: vec![
                ObjectClassSpec {
                    class: "Car".to_string(),
                    count: 14,
                    length: [4.0, 4.8],
                    width: [1.7, 2.0],
                    height: [1.4, 1.7],
                    density: 25.0,
                    speed: [3.0, 9.0],
                    shape: SurfaceShape::Box,
                },
                ObjectClassSpec {
                    class: "Pedestrian".to_string(),
                    count: 6,
                    length: [0.5, 0.8],
                    width: [0.5, 0.8],
                    height: [1.5, 1.85],
                    density: 40.0,
                    speed: [1.0, 1.6],
                    shape: SurfaceShape::Cylinder,
                },
                ObjectClassSpec {
                    class: "Barrier".to_string(),
                    count: 4,
                    length: [1.8, 2.4],
                    width: [0.3, 0.5],
                    height: [0.9, 1.1],
                    density: 30.0,
                    speed: [0.0, 0.0],
                    shape: SurfaceShape::Box,
                },
            ],
            static_fraction: 0.74,
            noise_sigma: 0.02,
            bleed_fraction: 0.02,
            bleed_offset: [0.75, 2.5],
            static_lateral: [5.0, 12.0],
            moving_lateral: [2.5, 4.5],
            longitudinal: [8.0, 70.0],
            yaw_jitter_deg: 3.0,
            min_box_area_px: 150.0,
            min_annotation_depth: 2.0,
            min_visible_fraction: 0.9,
            allow_truncated: false,
            emit_masks: true,
            mask_confidence: 0.95,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_frames == 0 {
            return bad("n_frames must be positive");
        }
        if !(self.frame_dt > 0.0) {
            return bad("frame_dt must be positive");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.static_fraction) {
            return bad("static_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.bleed_fraction) {
            return bad("bleed_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mask_confidence) {
            return bad("mask_confidence must lie in [0, 1]");
        }
        if !self.sensor_mount.iter().all(|v| v.is_finite()) {
            return bad("sensor_mount must be finite");
        }
        if self.cameras.is_empty() {
            return bad("at least one camera is required");
        }
        for pair in [self.bleed_offset, self.static_lateral, self.moving_lateral, self.longitudinal] {
            if !(pair[0] <= pair[1]) {
                return bad("ranges must be ordered [min, max]");
            }
        }
        for o in &self.objects {
            if !(o.density > 0.0) {
                return Err(Error::Config(format!("class {}: density must be positive", o.class)));
            }
            for r in [o.length, o.width, o.height] {
                if !(r[0] > 0.0 && r[0] <= r[1]) {
                    return Err(Error::Config(format!("class {}: extents must be positive ranges", o.class)));
                }
            }
            if !(o.speed[0] >= 0.0 && o.speed[0] <= o.speed[1]) {
                return Err(Error::Config(format!("class {}: bad speed range", o.class)));
            }
        }
        let mut ids: Vec<_> = self.cameras.iter().map(|c| c.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.cameras.len() {
            return bad("camera ids must be unique");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SimObject {
    track_id: String,
    class: String,
    density: f64,
    shape: SurfaceShape,
    is_static: bool,
    /// Box at t = 0.
    start: Box3D,
    /// World-frame BEV velocity.
    velocity: Vector2<f64>,
}

impl SimObject {
    fn box_at(&self, t: f64) -> Box3D {
        Box3D {
            cx: self.start.cx + self.velocity.x * t,
            cy: self.start.cy + self.velocity.y * t,
            ..self.start
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

fn place_objects(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Vec<SimObject> {
    let start_pose = cfg.ego.pose_at(0.0);
    let road_yaw = cfg.ego.start[2];
    let total: usize = cfg.objects.iter().map(|o| o.count).sum();
    let n_moving_target = total - (cfg.static_fraction * total as f64).round() as usize;

    // decide which instances move, among classes that can
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (ci, spec) in cfg.objects.iter().enumerate() {
        for k in 0..spec.count {
            slots.push((ci, k));
        }
    }
    let mut movable: Vec<usize> = (0..slots.len())
        .filter(|&i| cfg.objects[slots[i].0].speed[1] > 0.0)
        .collect();
    movable.shuffle(rng);
    movable.truncate(n_moving_target);
    let times: Vec<f64> = (0..cfg.n_frames).map(|i| i as f64 * cfg.frame_dt).collect();

    let mut placed: Vec<SimObject> = Vec::new();
    for (slot, &(ci, k)) in slots.iter().enumerate() {
        let spec = &cfg.objects[ci];
        let is_static = !movable.contains(&slot);
        for _attempt in 0..200 {
            let l = uniform(rng, spec.length);
            let w = uniform(rng, spec.width);
            let h = uniform(rng, spec.height);
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let along = uniform(rng, cfg.longitudinal);
            let lateral = side * uniform(rng, if is_static { cfg.static_lateral } else { cfg.moving_lateral });
            let flip = if rng.random::<bool>() { PI } else { 0.0 };
            let jitter = uniform(rng, [-cfg.yaw_jitter_deg, cfg.yaw_jitter_deg]).to_radians();
            let yaw = road_yaw + flip + jitter;
            let speed = if is_static { 0.0 } else { uniform(rng, spec.speed) };
            let c = start_pose.apply(&Vector3::new(along, lateral, 0.0));
            let start = match Box3D::new(Vector3::new(c.x, c.y, 0.5 * h), l, w, h, yaw) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let velocity = Vector2::new(yaw.cos(), yaw.sin()) * speed;
            let candidate = SimObject {
                track_id: format!("{}-{:03}", spec.class.to_lowercase(), k),
                class: spec.class.clone(),
                density: spec.density,
                shape: spec.shape,
                is_static,
                start,
                velocity,
            };
            let clear = placed.iter().all(|other| {
                let gap = 0.5 * (candidate.start.l.hypot(candidate.start.w) + other.start.l.hypot(other.start.w)) + 0.5;
                times.iter().all(|&t| {
                    let a = candidate.box_at(t);
                    let b = other.box_at(t);
                    (a.cx - b.cx).hypot(a.cy - b.cy) > gap
                })
            });
            let ego_gap = 0.5 * candidate.start.l.hypot(candidate.start.w) + 1.5;
            let clear_of_ego = times.iter().all(|&t| {
                let e = cfg.ego.pose_at(t).translation;
                let b = candidate.box_at(t);
                (b.cx - e.x).hypot(b.cy - e.y) > ego_gap
            });
            if clear && clear_of_ego {
                placed.push(candidate);
                break;
            }
        }
    }
    placed
}

type FaceFrame = (Vector3<f64>, Vector3<f64>, Vector3<f64>, Vector3<f64>);

/// Outward unit normals and face centers, box frame, in [`FACE_NAMES`] order.
fn face_frames(b: &Box3D) -> [FaceFrame; 6] {
    // (normal, center, half-span u, half-span v) in local coordinates
    let (hl, hw, hh) = (0.5 * b.l, 0.5 * b.w, 0.5 * b.h);
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    [
        (x, x * hl, y * hw, z * hh),
        (-x, -x * hl, y * hw, z * hh),
        (y, y * hw, x * hl, z * hh),
        (-y, -y * hw, x * hl, z * hh),
        (z, z * hh, x * hl, y * hw),
        (-z, -z * hh, x * hl, y * hw),
    ]
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    Poisson::new(lambda).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

/// World-frame surface samples of `b` facing `sensor`, each with the index
/// of the box face whose outward normal is closest to the surface normal.
fn sample_surface(b: &Box3D, obj: &SimObject, sensor: &Vector3<f64>, rng: &mut ChaCha8Rng) -> Vec<(Vector3<f64>, i8)> {
    let mut out = Vec::new();
    let faces = face_frames(b);
    match obj.shape {
        SurfaceShape::Box => {
            for (k, (n, c, u, v)) in faces.iter().enumerate() {
                let normal_w = b.to_world(n) - b.center();
                if (sensor - b.to_world(c)).dot(&normal_w) <= 0.0 {
                    continue;
                }
                for _ in 0..poisson(rng, obj.density * 4.0 * u.norm() * v.norm()) {
                    let s = rng.random_range(-1.0..1.0);
                    let t = rng.random_range(-1.0..1.0);
                    out.push((b.to_world(&(c + u * s + v * t)), k as i8));
                }
            }
        }
        SurfaceShape::Cylinder => {
            let (a, e, hh) = (0.5 * b.l, 0.5 * b.w, 0.5 * b.h);
            let local_sensor = b.to_local(sensor);
            // side wall: uniform in arc length by rejection on the speed |dγ/dφ|
            let ramanujan = PI * (3.0 * (a + e) - ((3.0 * a + e) * (a + 3.0 * e)).sqrt());
            let max_speed = a.max(e);
            for _ in 0..poisson(rng, obj.density * ramanujan * b.h) {
                let phi = rng.random_range(0.0..2.0 * PI);
                let (sn, cs) = phi.sin_cos();
                if rng.random::<f64>() * max_speed > (a * sn).hypot(e * cs) {
                    continue;
                }
                let p = Vector3::new(a * cs, e * sn, rng.random_range(-hh..hh));
                let n = Vector3::new(e * cs, a * sn, 0.0);
                if (local_sensor - p).dot(&n) <= 0.0 {
                    continue;
                }
                let k = if (n.x / e).abs() >= (n.y / a).abs() {
                    if n.x >= 0.0 { 0 } else { 1 }
                } else if n.y >= 0.0 {
                    2
                } else {
                    3
                };
                out.push((b.to_world(&p), k));
            }
            if local_sensor.z > hh {
                for _ in 0..poisson(rng, obj.density * PI * a * e) {
                    let r = rng.random::<f64>().sqrt();
                    let phi = rng.random_range(0.0..2.0 * PI);
                    out.push((b.to_world(&Vector3::new(a * r * phi.cos(), e * r * phi.sin(), hh)), 4));
                }
            }
        }
    }
    out
}

/// Parameter interval over which the line `origin + t·dir` lies inside the box.
fn ray_interval(b: &Box3D, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64)> {
    let o = b.to_local(origin);
    let (s, c) = b.yaw.sin_cos();
    let d = Vector3::new(c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z);
    let half = [0.5 * b.l, 0.5 * b.w, 0.5 * b.h];
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let t1 = (-half[k] - o[k]) / d[k];
        let t2 = (half[k] - o[k]) / d[k];
        t_near = t_near.max(t1.min(t2));
        t_far = t_far.min(t1.max(t2));
    }
    (t_near <= t_far).then_some((t_near, t_far))
}

/// Distance along `dir` from `origin` at which the ray leaves the box.
fn ray_exit(b: &Box3D, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    ray_interval(b, origin, dir).filter(|(_, t_far)| *t_far > 0.0).map(|(_, t_far)| t_far)
}

/// True when the open segment between `from` and `to` passes through a box.
fn occluded(from: &Vector3<f64>, to: &Vector3<f64>, boxes: &[&Box3D]) -> bool {
    let d = to - from;
    let len = d.norm();
    let dir = d / len;
    boxes
        .iter()
        .any(|b| ray_interval(b, from, &dir).is_some_and(|(n, f)| n < len - 1e-6 && f > 1e-6))
}

struct AnnotatingView {
    camera: CameraModel,
    annotation: Annotation2D,
}

/// Annotation of `b` in the camera that shows it largest, among cameras
/// where its center is in the image, its box is large enough and enough of
/// its silhouette is not hidden behind nearer objects. The mask is the
/// visible part of the silhouette.
fn best_view(
    cfg: &SceneConfig,
    rigs: &BTreeMap<String, CameraRig>,
    world_from_ego: &Pose,
    obj: &SimObject,
    b: &Box3D,
    others: &[&Box3D],
) -> Result<Option<AnnotatingView>> {
    let mut candidates = Vec::new();
    for (id, rig) in rigs {
        let camera = rig.at(world_from_ego)?;
        let center_cam = camera.camera_from_world().apply(&b.center());
        if center_cam.z < cfg.min_annotation_depth {
            continue;
        }
        let Some(px) = camera.project_point(&b.center()) else {
            continue;
        };
        if px.x < 0.0 || px.y < 0.0 || px.x >= camera.width() || px.y >= camera.height() {
            continue;
        }
        let Some(bbox) = camera.project_box3d(b) else {
            continue;
        };
        if bbox.area() < cfg.min_box_area_px {
            continue;
        }
        candidates.push((bbox.area(), id, rig, camera, bbox));
    }
    // largest first; the sort is stable so camera id order breaks ties
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, id, rig, camera, bbox) in candidates {
        let pixels = camera.clipped_box_pixels(b);
        let inside = |p: &Vector2<f64>| p.x >= 0.0 && p.y >= 0.0 && p.x <= camera.width() && p.y <= camera.height();
        if !cfg.allow_truncated && !pixels.iter().all(inside) {
            continue;
        }
        let Ok(hull) = convex_hull(&pixels) else {
            continue;
        };
        let mut bm = Bitmap::new(rig.width, rig.height);
        let silhouette = bm.fill_convex(&hull);
        let own_dist = (b.center() - camera.center()).norm();
        let mut hidden = 0;
        for o in others {
            if (o.center() - camera.center()).norm() >= own_dist {
                continue;
            }
            let Some(ob) = camera.project_box3d(o) else {
                continue;
            };
            if ob.intersection_area(&bbox) <= 0.0 {
                continue;
            }
            if let Ok(oh) = convex_hull(&camera.clipped_box_pixels(o)) {
                hidden += bm.clear_convex(&oh);
            }
        }
        if silhouette == 0 || ((silhouette - hidden) as f64) < cfg.min_visible_fraction * silhouette as f64 {
            continue;
        }
        let mask = cfg.emit_masks.then(|| bm.encode());
        let mask_confidence = mask.as_ref().map(|_| cfg.mask_confidence);
        return Ok(Some(AnnotatingView {
            camera,
            annotation: Annotation2D {
                track_id: obj.track_id.clone(),
                class_label: obj.class.clone(),
                camera_id: id.clone(),
                bbox,
                mask,
                mask_confidence,
            },
        }));
    }
    Ok(None)
}

/// Builds a synthetic scene. Identical configs (including `seed`) produce
/// identical scenes.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rigs = BTreeMap::new();
    for spec in &cfg.cameras {
        rigs.insert(spec.id.clone(), spec.rig()?);
    }
    let objects = place_objects(cfg, &mut rng);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;

    let mut frames = Vec::with_capacity(cfg.n_frames);
    let mut gt_points = Vec::with_capacity(cfg.n_frames);
    let mut gt_boxes: Vec<BTreeMap<u64, Box3D>> = vec![BTreeMap::new(); objects.len()];

    for fi in 0..cfg.n_frames {
        let frame_id = fi as u64;
        let t = fi as f64 * cfg.frame_dt;
        let world_from_ego = cfg.ego.pose_at(t);
        let ego_from_world = world_from_ego.inverse();
        let sensor = world_from_ego.apply(&Vector3::from(cfg.sensor_mount));

        let mut points = Vec::new();
        let mut instance = Vec::new();
        let mut face_ids = Vec::new();
        let mut annotations = Vec::new();

        let boxes: Vec<Box3D> = objects.iter().map(|o| o.box_at(t)).collect();
        let in_range: Vec<bool> = boxes
            .iter()
            .map(|b| (b.cx - sensor.x).hypot(b.cy - sensor.y) <= cfg.max_range)
            .collect();

        for (oi, obj) in objects.iter().enumerate() {
            let b = boxes[oi];
            gt_boxes[oi].insert(frame_id, b);
            if !in_range[oi] {
                continue;
            }
            let others: Vec<&Box3D> = (0..boxes.len())
                .filter(|&k| k != oi && in_range[k])
                .map(|k| &boxes[k])
                .collect();
            let view = best_view(cfg, &rigs, &world_from_ego, obj, &b, &others)?;

            let mut surface = Vec::new();
            for (on_face, k) in sample_surface(&b, obj, &sensor, &mut rng) {
                let jitter = Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                if !occluded(&sensor, &on_face, &others) {
                    surface.push((on_face, on_face + jitter, k));
                }
            }
            for &(_, p, k) in &surface {
                points.push(mvpc::quantize(ego_from_world.apply(&p)));
                instance.push(oi as i32);
                face_ids.push(k);
            }
            if let Some(view) = view {
                if cfg.bleed_fraction > 0.0 {
                    let origin = view.camera.center();
                    for &(on_face, _, _) in &surface {
                        if !rng.random_bool(cfg.bleed_fraction) {
                            continue;
                        }
                        let dir = (on_face - origin).normalize();
                        let exit = ray_exit(&b, &origin, &dir).unwrap_or((on_face - origin).norm());
                        let p = origin + dir * (exit + uniform(&mut rng, cfg.bleed_offset));
                        points.push(mvpc::quantize(ego_from_world.apply(&p)));
                        instance.push(oi as i32);
                        face_ids.push(-1);
                    }
                }
                annotations.push(view.annotation);
            }
        }

        frames.push(Frame {
            frame_id,
            timestamp: t,
            world_from_ego,
            pointcloud: format!("clouds/{frame_id:06}.mvpc"),
            annotations,
            points,
        });
        gt_points.push(GtPointLabels {
            frame_id,
            instance,
            face: face_ids,
        });
    }

    let tracks = objects
        .iter()
        .zip(gt_boxes)
        .map(|(o, boxes)| GtTrack {
            track_id: o.track_id.clone(),
            class_label: o.class.clone(),
            is_static: o.is_static,
            boxes,
        })
        .collect();

    Ok(Scene {
        scene_id: cfg.scene_id.clone(),
        cameras: rigs,
        frames,
        gt_tracks: Some(GroundTruth {
            tracks,
            points: gt_points,
        }),
        generator: Some(GeneratorInfo {
            seed: cfg.seed,
            config: cfg.clone(),
        }),
    })
}
