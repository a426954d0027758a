//! Dataset model, on-disk formats and the synthetic scene generator.
//!
//! A dataset directory holds a `scene.json` manifest plus one `.mvpc` point
//! cloud per frame. Point clouds are stored in the ego frame and moved to
//! the world frame with the frame's `world_from_ego` pose on use.

mod generator;
mod labels_io;
mod manifest;
mod mask;
pub mod mvpc;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Box2D, Box3D, CameraIntrinsics, CameraModel, Point3, Pose};

pub use generator::{
    generate_scene, CameraSpec, EgoTrajectory, ObjectClassSpec, SceneConfig, SurfaceShape, FACE_NAMES,
};
pub use labels_io::{read_pseudo_labels, write_pseudo_labels};
pub use manifest::{load_scene, save_scene, MANIFEST_NAME};
pub use mask::{decode_mask, point_in_mask, Bitmap, Mask, MaskLookup};

/// Camera as stored in the manifest: intrinsics plus its mount on the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub ego_from_camera: Pose,
}

impl CameraRig {
    pub fn new(intrinsics: CameraIntrinsics, ego_from_camera: Pose) -> Self {
        Self {
            fx: intrinsics.fx,
            fy: intrinsics.fy,
            cx: intrinsics.cx,
            cy: intrinsics.cy,
            width: intrinsics.width,
            height: intrinsics.height,
            ego_from_camera,
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    /// The camera posed in the world for a vehicle at `world_from_ego`.
    pub fn at(&self, world_from_ego: &Pose) -> Result<CameraModel> {
        CameraModel::new(self.intrinsics(), world_from_ego.compose(&self.ego_from_camera))
    }
}

/// One 2D box annotation of a tracked object in one camera image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation2D {
    pub track_id: String,
    #[serde(rename = "class")]
    pub class_label: String,
    pub camera_id: String,
    #[serde(rename = "box")]
    pub bbox: Box2D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Mask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp: f64,
    pub world_from_ego: Pose,
    /// Path of the `.mvpc` file, relative to the dataset directory.
    pub pointcloud: String,
    #[serde(default)]
    pub annotations: Vec<Annotation2D>,
    /// Ego-frame points, filled by [`load_scene`].
    #[serde(skip)]
    pub points: Vec<Point3>,
}

impl Frame {
    pub fn world_points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.points.iter().map(|p| self.world_from_ego.apply(p))
    }
}

/// Ground-truth box track (synthetic scenes only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtTrack {
    pub track_id: String,
    #[serde(rename = "class")]
    pub class_label: String,
    #[serde(rename = "static")]
    pub is_static: bool,
    /// Box per frame id, for every frame in which the object exists.
    pub boxes: BTreeMap<u64, Box3D>,
}

/// Per-point ground truth for one frame (synthetic scenes only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtPointLabels {
    pub frame_id: u64,
    /// Index into [`GroundTruth::tracks`] of the object a point was sampled
    /// from, or −1.
    pub instance: Vec<i32>,
    /// Box face a surface point lies on (see [`FACE_NAMES`]), or −1 for
    /// bleed outliers.
    pub face: Vec<i8>,
}

impl GtPointLabels {
    pub fn is_bleed(&self, i: usize) -> bool {
        self.instance[i] >= 0 && self.face[i] < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub tracks: Vec<GtTrack>,
    pub points: Vec<GtPointLabels>,
}

impl GroundTruth {
    pub fn track(&self, track_id: &str) -> Option<&GtTrack> {
        self.tracks.iter().find(|t| t.track_id == track_id)
    }

    pub fn track_index(&self, track_id: &str) -> Option<usize> {
        self.tracks.iter().position(|t| t.track_id == track_id)
    }

    pub fn points_for(&self, frame_id: u64) -> Option<&GtPointLabels> {
        self.points.iter().find(|p| p.frame_id == frame_id)
    }
}

/// How a synthetic scene was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorInfo {
    pub seed: u64,
    pub config: SceneConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub scene_id: String,
    pub cameras: BTreeMap<String, CameraRig>,
    pub frames: Vec<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_tracks: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl Scene {
    pub fn camera(&self, frame: &Frame, camera_id: &str) -> Result<CameraModel> {
        let rig = self
            .cameras
            .get(camera_id)
            .ok_or_else(|| Error::Config(format!("unknown camera_id {camera_id:?}")))?;
        rig.at(&frame.world_from_ego)
    }

    pub fn frame(&self, frame_id: u64) -> Option<&Frame> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Sorted, de-duplicated track ids that carry at least one annotation.
    pub fn annotated_track_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .frames
            .iter()
            .flat_map(|f| f.annotations.iter().map(|a| a.track_id.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
