use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    filter_pseudo_label, l2d_views, l_fit, objective, refine_box, FilterThresholds, LabelQuality, LabelSource,
    ObjectiveWeights, PseudoLabel, RefineOptions, WORLD_FRAME,
};
use crate::cluster::{aggregate_static, dbscan, quality_gate, select_dominant_cluster};
use crate::coarse::{fit_coarse_box, verify_geometry, CoarseBoxResult};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::extract::{build_tracks, centroid, classify_motion, MotionState, MotionVerdict, ObjectTrack};
use crate::geom::{Box2D, Box3D, CameraModel, Point2, Point3};
use crate::scene::Scene;

/// Everything the pipeline learned about one track; the label plus the
/// intermediate sets the evaluation needs.
#[derive(Debug, Clone)]
pub struct TrackAnalysis {
    pub label: PseudoLabel,
    pub motion: Option<MotionVerdict>,
    /// `(frame_id, point index)` of every point fed to clustering: the
    /// multi-view aggregate for static tracks, the reference view otherwise.
    pub aggregate: Vec<(u64, usize)>,
    /// The dominant cluster, same keys as `aggregate`.
    pub cluster: Option<Vec<(u64, usize)>>,
    pub coarse: Option<CoarseBoxResult>,
    /// Frames whose 2D boxes enter the objective.
    pub frames_used: Vec<u64>,
}

impl TrackAnalysis {
    fn failed(track: &ObjectTrack, reason: &str) -> Self {
        Self {
            label: PseudoLabel::dropped(&track.track_id, &track.class_label, reason),
            motion: None,
            aggregate: Vec::new(),
            cluster: None,
            coarse: None,
            frames_used: Vec::new(),
        }
    }
}

/// Class with the most annotations in the track; ties go to the
/// lexicographically smallest name.
fn majority_class(track: &ObjectTrack) -> String {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &track.observations {
        *votes.entry(o.annotation.class_label.as_str()).or_default() += 1;
    }
    let top = votes.values().copied().max().unwrap_or(0);
    votes
        .into_iter()
        .find(|(_, v)| *v == top)
        .map(|(c, _)| c.to_string())
        .unwrap_or_else(|| track.class_label.clone())
}

/// Runs one track through extraction, motion classification, clustering,
/// coarse fitting, verification, refinement and filtering.
pub fn analyze_track(track: &ObjectTrack, cfg: &PipelineConfig) -> TrackAnalysis {
    let with_points: Vec<usize> = (0..track.observations.len())
        .filter(|&i| !track.observations[i].points.is_empty())
        .collect();
    if with_points.is_empty() {
        return TrackAnalysis::failed(track, "extract");
    }
    let centroids: Vec<Point3> = with_points
        .iter()
        .filter_map(|&i| centroid(&track.observations[i].points, cfg.centroid))
        .collect();
    let verdict = classify_motion(&centroids, cfg.tau_static);

    // points to cluster with their provenance, the views entering l2d, and
    // the frame the box belongs to (moving objects only)
    let (points, provenance, view_idx, n_views, frame_id, min_views) = match verdict.state {
        MotionState::Static => match aggregate_static(track) {
            Ok(agg) => {
                let n = agg.n_views();
                let all: Vec<usize> = (0..track.observations.len()).collect();
                (agg.points_agg, agg.provenance, all, n, None, cfg.min_views)
            }
            Err(_) => return TrackAnalysis::failed(track, "aggregate"),
        },
        MotionState::Moving => {
            // densest view; earliest frame on ties
            let r = with_points
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let (na, nb) = (track.observations[a].points.len(), track.observations[b].points.len());
                    na.cmp(&nb).then(b.cmp(&a))
                })
                .expect("non-empty");
            let obs = &track.observations[r];
            let prov = obs.point_indices.iter().map(|&i| (obs.frame_id, i)).collect();
            (obs.points.clone(), prov, vec![r], 1, Some(obs.frame_id), 1)
        }
    };

    let mut analysis = TrackAnalysis {
        motion: Some(verdict),
        aggregate: provenance,
        frames_used: view_idx.iter().map(|&i| track.observations[i].frame_id).collect(),
        ..TrackAnalysis::failed(track, "cluster")
    };
    analysis.label.frame_id = frame_id;
    analysis.label.quality.n_views = n_views;

    let labels = dbscan(&points, cfg.dbscan_eps, cfg.dbscan_min_pts);
    let Ok(cluster) = select_dominant_cluster(&points, &labels) else {
        return analysis;
    };
    analysis.cluster = Some(cluster.indices.iter().map(|&i| analysis.aggregate[i]).collect());
    let c_points: Vec<Point3> = cluster.indices.iter().map(|&i| points[i]).collect();
    analysis.label.quality.n_points = c_points.len();

    let Ok(fit) = fit_coarse_box(&c_points, cfg.extent_floor) else {
        analysis.label.drop_reason = Some("coarse".into());
        return analysis;
    };
    let bev: Vec<Point2> = c_points.iter().map(|p| p.xy()).collect();
    let verification = verify_geometry(&fit, &bev, cfg.tau_iou, cfg.verify_metric).ok();
    analysis.coarse = verification;
    analysis.label.quality.hull_iou = verification.map(|v| v.hull_iou);

    let views: Vec<(&CameraModel, &Box2D)> = view_idx
        .iter()
        .map(|&i| (&track.observations[i].camera, &track.observations[i].annotation.bbox))
        .collect();
    let weights = ObjectiveWeights {
        lambda_2d: cfg.lambda_2d,
        mu_fit: cfg.mu_fit,
    };

    let gate = quality_gate(c_points.len(), n_views, cfg.min_cluster_points, min_views);
    let verified = verification.is_some_and(|v| v.verified);
    let (bbox, source) = if gate.is_ok() && verified && cfg.refine_enabled() {
        let opts = RefineOptions {
            budget: cfg.refine_budget,
            extent_floor: cfg.extent_floor,
            ..Default::default()
        };
        let out = refine_box(&fit.bbox, &c_points, &views, &weights, &opts);
        (out.bbox, LabelSource::Refined)
    } else {
        (fit.bbox, LabelSource::Coarse)
    };
    finish_label(&mut analysis.label, bbox, source, &c_points, &views);

    let reason = match (gate, verified) {
        (Err(g), _) => Some(g.reason().to_string()),
        (Ok(()), false) => Some("geometry".to_string()),
        (Ok(()), true) => {
            let confidence = (-objective(&bbox, &c_points, &views, &weights)).exp();
            let outcome = filter_pseudo_label(
                &majority_class(track),
                &track.class_label,
                confidence,
                &FilterThresholds::from_config(cfg),
            );
            outcome.verdict.drop_reason().map(str::to_string)
        }
    };
    analysis.label.kept = reason.is_none();
    analysis.label.drop_reason = reason;
    analysis
}

fn finish_label(
    label: &mut PseudoLabel,
    bbox: Box3D,
    source: LabelSource,
    points: &[Point3],
    views: &[(&CameraModel, &Box2D)],
) {
    label.bbox = Some(bbox);
    label.source = source;
    label.frame_of_reference = WORLD_FRAME.to_string();
    label.quality = LabelQuality {
        l2d: Some(l2d_views(&bbox, views.iter().copied())),
        fit: Some(l_fit(&bbox, points)),
        ..label.quality.clone()
    };
}

pub fn annotate_track(track: &ObjectTrack, cfg: &PipelineConfig) -> PseudoLabel {
    analyze_track(track, cfg).label
}

/// Analyses every annotated track, in track-id order.
pub fn analyze_scene(scene: &Scene, cfg: &PipelineConfig) -> Result<Vec<TrackAnalysis>> {
    cfg.validate()?;
    let tracks = build_tracks(scene, cfg)?;
    Ok(tracks.par_iter().map(|t| analyze_track(t, cfg)).collect())
}

/// One label per annotated track, sorted by track id.
pub fn annotate_scene(scene: &Scene, cfg: &PipelineConfig) -> Result<Vec<PseudoLabel>> {
    Ok(analyze_scene(scene, cfg)?.into_iter().map(|a| a.label).collect())
}
