//! Per-view object point extraction and static/moving classification.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::{CentroidMode, PipelineConfig};
use crate::error::Result;
use crate::geom::{CameraModel, Point3};
use crate::scene::{Annotation2D, Frame, MaskLookup, Scene};

/// Pixel-membership test for one annotation: its mask when present and
/// confident enough, otherwise its 2D box.
enum Region<'a> {
    Mask(MaskLookup),
    Box(&'a Annotation2D),
}

impl<'a> Region<'a> {
    fn new(annotation: &'a Annotation2D, mask_conf_min: f64) -> Result<Self> {
        match &annotation.mask {
            // a mask without a confidence score is taken at face value
            Some(mask) if annotation.mask_confidence.is_none_or(|c| c >= mask_conf_min) => {
                Ok(Region::Mask(MaskLookup::new(mask)?))
            }
            _ => Ok(Region::Box(annotation)),
        }
    }

    fn contains(&self, pixel: &nalgebra::Vector2<f64>) -> bool {
        match self {
            Region::Mask(m) => m.contains(pixel),
            Region::Box(a) => a.bbox.contains(pixel),
        }
    }
}

/// Indices into `frame.points` of the points whose projection falls inside
/// the annotation's region.
pub fn extract_indices(
    frame: &Frame,
    annotation: &Annotation2D,
    camera: &CameraModel,
    mask_conf_min: f64,
) -> Result<Vec<usize>> {
    let region = Region::new(annotation, mask_conf_min)?;
    let camera_from_ego = camera.camera_from_world().compose(&frame.world_from_ego);
    Ok(frame
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            camera
                .project_camera_point(&camera_from_ego.apply(p))
                .is_some_and(|px| region.contains(&px))
        })
        .map(|(i, _)| i)
        .collect())
}

/// World-frame points of `frame` that fall inside the annotation's mask (or
/// box, when the mask is missing or below `mask_conf_min`).
pub fn extract_object_points(
    frame: &Frame,
    annotation: &Annotation2D,
    camera: &CameraModel,
    mask_conf_min: f64,
) -> Result<Vec<Point3>> {
    let idx = extract_indices(frame, annotation, camera, mask_conf_min)?;
    Ok(idx.iter().map(|&i| frame.world_from_ego.apply(&frame.points[i])).collect())
}

/// One annotated frame of a track with its extracted points.
#[derive(Debug, Clone)]
pub struct Observation {
    pub frame_id: u64,
    pub annotation: Annotation2D,
    pub camera: CameraModel,
    /// World-frame points.
    pub points: Vec<Point3>,
    /// Indices of `points` in the frame's point cloud.
    pub point_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ObjectTrack {
    pub track_id: String,
    pub class_label: String,
    /// Sorted by frame id, one per frame.
    pub observations: Vec<Observation>,
}

impl ObjectTrack {
    pub fn frame_ids(&self) -> Vec<u64> {
        self.observations.iter().map(|o| o.frame_id).collect()
    }

    /// Frames with at least one extracted point.
    pub fn n_views(&self) -> usize {
        self.observations.iter().filter(|o| !o.points.is_empty()).count()
    }
}

/// Groups annotations by track and extracts each observation's points.
/// Tracks come back sorted by id. When a track is annotated in several
/// cameras in one frame, the annotation with the largest box is used.
pub fn build_tracks(scene: &Scene, cfg: &PipelineConfig) -> Result<Vec<ObjectTrack>> {
    let mut grouped: BTreeMap<&str, Vec<(&Frame, &Annotation2D)>> = BTreeMap::new();
    for frame in &scene.frames {
        for ann in &frame.annotations {
            let list = grouped.entry(ann.track_id.as_str()).or_default();
            match list.last_mut() {
                Some(last) if last.0.frame_id == frame.frame_id => {
                    if ann.bbox.area() > last.1.bbox.area() {
                        *last = (frame, ann);
                    }
                }
                _ => list.push((frame, ann)),
            }
        }
    }
    grouped
        .into_par_iter()
        .map(|(track_id, list)| {
            let observations = list
                .into_iter()
                .map(|(frame, ann)| {
                    let camera = scene.camera(frame, &ann.camera_id)?;
                    let point_indices = extract_indices(frame, ann, &camera, cfg.mask_conf_min)?;
                    let points = point_indices
                        .iter()
                        .map(|&i| frame.world_from_ego.apply(&frame.points[i]))
                        .collect();
                    Ok(Observation {
                        frame_id: frame.frame_id,
                        annotation: ann.clone(),
                        camera,
                        points,
                        point_indices,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ObjectTrack {
                track_id: track_id.to_string(),
                class_label: observations[0].annotation.class_label.clone(),
                observations,
            })
        })
        .collect()
}

/// Mean or coordinate-wise median; `None` for an empty set.
pub fn centroid(points: &[Point3], mode: CentroidMode) -> Option<Point3> {
    if points.is_empty() {
        return None;
    }
    Some(match mode {
        CentroidMode::Mean => points.iter().sum::<Point3>() / points.len() as f64,
        CentroidMode::Median => {
            let median = |k: usize| {
                let mut v: Vec<f64> = points.iter().map(|p| p[k]).collect();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    0.5 * (v[n / 2 - 1] + v[n / 2])
                }
            };
            Point3::new(median(0), median(1), median(2))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionState {
    Static,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionVerdict {
    pub state: MotionState,
    pub max_pairwise_displacement: f64,
    pub n_observations: usize,
    /// Fewer than two centroids: no motion evidence either way.
    pub low_evidence: bool,
}

/// Static iff the largest distance between any two centroids is below
/// `tau_static`.
pub fn classify_motion(centroids: &[Point3], tau_static: f64) -> MotionVerdict {
    let mut max_d = 0.0f64;
    for (i, a) in centroids.iter().enumerate() {
        for b in &centroids[i + 1..] {
            max_d = max_d.max((a - b).norm());
        }
    }
    let low_evidence = centroids.len() < 2;
    MotionVerdict {
        state: if low_evidence || max_d < tau_static {
            MotionState::Static
        } else {
            MotionState::Moving
        },
        max_pairwise_displacement: max_d,
        n_observations: centroids.len(),
        low_evidence,
    }
}
