use serde::{Deserialize, Serialize};

use crate::geom::Box3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Coarse,
    Refined,
}

/// Diagnostics attached to every label. Stage outputs that were never
/// reached are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelQuality {
    /// Points in the dominant cluster the box was fitted to.
    pub n_points: usize,
    /// Frames with a non-empty extraction.
    pub n_views: usize,
    pub hull_iou: Option<f64>,
    pub l2d: Option<f64>,
    pub fit: Option<f64>,
}

/// A machine-generated 3D box with provenance and a keep/drop verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoLabel {
    pub track_id: String,
    #[serde(rename = "class")]
    pub class_label: String,
    /// Absent only when the pipeline failed before any box could be formed.
    #[serde(rename = "box")]
    pub bbox: Option<Box3D>,
    pub frame_of_reference: String,
    /// Frame the box belongs to for moving objects; static boxes hold for
    /// every frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_id: Option<u64>,
    pub source: LabelSource,
    pub quality: LabelQuality,
    pub kept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<String>,
}

pub const WORLD_FRAME: &str = "world";

impl PseudoLabel {
    pub fn dropped(track_id: &str, class_label: &str, reason: &str) -> Self {
        Self {
            track_id: track_id.to_string(),
            class_label: class_label.to_string(),
            bbox: None,
            frame_of_reference: WORLD_FRAME.to_string(),
            frame_id: None,
            source: LabelSource::Coarse,
            quality: LabelQuality::default(),
            kept: false,
            drop_reason: Some(reason.to_string()),
        }
    }
}
