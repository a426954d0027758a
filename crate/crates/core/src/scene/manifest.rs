use std::path::{Path, PathBuf};

use serde_path_to_error::Segment;

use super::{decode_mask, mvpc, write_atomic, Scene};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "scene.json";

/// Slack when checking that annotation boxes lie inside the image.
const IMAGE_BOUNDS_TOL: f64 = 1e-6;

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates a manifest without touching point cloud files.
pub fn parse_manifest(text: &str) -> Result<Scene> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scene: Scene = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::parse(pointer(e.path()), e.inner().to_string()))?;
    validate(&scene)?;
    Ok(scene)
}

fn validate(scene: &Scene) -> Result<()> {
    for (id, rig) in &scene.cameras {
        rig.intrinsics()
            .validate()
            .map_err(|e| Error::parse(format!("/cameras/{id}"), e.to_string()))?;
    }
    for (fi, frame) in scene.frames.iter().enumerate() {
        let at = format!("/frames/{fi}");
        if fi > 0 {
            let prev = &scene.frames[fi - 1];
            if frame.frame_id <= prev.frame_id || frame.timestamp <= prev.timestamp {
                return Err(Error::parse(
                    at,
                    "frame ids and timestamps must be strictly increasing",
                ));
            }
        }
        if !frame.timestamp.is_finite() {
            return Err(Error::parse(format!("{at}/timestamp"), "timestamp must be finite"));
        }
        for (ai, ann) in frame.annotations.iter().enumerate() {
            let at = format!("{at}/annotations/{ai}");
            let rig = scene.cameras.get(&ann.camera_id).ok_or_else(|| {
                Error::parse(format!("{at}/camera_id"), format!("unknown camera {:?}", ann.camera_id))
            })?;
            ann.bbox.validate().map_err(|e| {
                Error::parse(format!("{at}/box"), format!("track {}: {e}", ann.track_id))
            })?;
            let b = &ann.bbox;
            if b.x_min < -IMAGE_BOUNDS_TOL
                || b.y_min < -IMAGE_BOUNDS_TOL
                || b.x_max > rig.width as f64 + IMAGE_BOUNDS_TOL
                || b.y_max > rig.height as f64 + IMAGE_BOUNDS_TOL
            {
                return Err(Error::parse(
                    format!("{at}/box"),
                    format!("track {}: box outside the {}x{} image", ann.track_id, rig.width, rig.height),
                ));
            }
            if let Some(mask) = &ann.mask {
                if mask.width != rig.width || mask.height != rig.height {
                    return Err(Error::parse(
                        format!("{at}/mask"),
                        "mask size differs from the camera image size",
                    ));
                }
                decode_mask(mask).map_err(|e| Error::parse(format!("{at}/mask/rle"), e.to_string()))?;
            }
            if let Some(c) = ann.mask_confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::parse(
                        format!("{at}/mask_confidence"),
                        "mask confidence must lie in [0, 1]",
                    ));
                }
            }
        }
    }
    if let Some(gt) = &scene.gt_tracks {
        for (pi, labels) in gt.points.iter().enumerate() {
            if labels.instance.len() != labels.face.len() {
                return Err(Error::parse(
                    format!("/gt_tracks/points/{pi}"),
                    "instance and face arrays differ in length",
                ));
            }
        }
    }
    Ok(())
}

/// Loads `scene.json` (or the manifest at `path` itself) and every point cloud
/// it references.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let manifest = manifest_path(path);
    let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut scene = parse_manifest(&text)?;
    for frame in scene.frames.iter_mut() {
        frame.points = mvpc::read(&root.join(&frame.pointcloud))?;
    }
    if let Some(gt) = &scene.gt_tracks {
        for labels in &gt.points {
            let n = scene.frame(labels.frame_id).map(|f| f.points.len());
            if n != Some(labels.instance.len()) {
                return Err(Error::parse(
                    "/gt_tracks/points",
                    format!("labels for frame {} do not match its point cloud", labels.frame_id),
                ));
            }
        }
    }
    Ok(scene)
}

/// Writes the manifest and point clouds under `dir`. Each file is replaced
/// atomically.
pub fn save_scene(scene: &Scene, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for frame in &scene.frames {
        mvpc::write(&dir.join(&frame.pointcloud), &frame.points)?;
    }
    let text = serde_json::to_vec(scene).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_NAME), &text)
}
