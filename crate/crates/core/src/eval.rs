//! Metrics against synthetic ground truth and the JSON evaluation report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::extract::MotionState;
use crate::geom::{iou_3d, Box3D};
use crate::refine::{analyze_scene, LabelSource, PseudoLabel, TrackAnalysis};
use crate::scene::{GroundTruth, Scene};

pub const DEFAULT_THRESHOLDS: [usize; 7] = [0, 10, 25, 50, 100, 150, 200];

/// `|A ∩ B| / |A ∪ B|` over index sets (duplicates ignored); 1 when both
/// are empty.
pub fn point_set_iou<T: Ord + Copy>(pred: &[T], gt: &[T]) -> f64 {
    let a: BTreeSet<T> = pred.iter().copied().collect();
    let b: BTreeSet<T> = gt.iter().copied().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn median(sorted: &[usize]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) as f64),
    }
}

/// Surface points (bleed excluded) the generator drew from track `gt_index`
/// in the given frames.
pub fn gt_instance_points(gt: &GroundTruth, gt_index: usize, frames: &[u64]) -> Vec<(u64, usize)> {
    let mut out = Vec::new();
    for &f in frames {
        if let Some(labels) = gt.points_for(f) {
            for (i, (&inst, &face)) in labels.instance.iter().zip(&labels.face).enumerate() {
                if inst == gt_index as i32 && face >= 0 {
                    out.push((f, i));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub min_points: usize,
    pub retained: usize,
    pub mean_iou_agg: Option<f64>,
    pub mean_iou_cluster: Option<f64>,
}

/// Per-instance point-set IoU of the aggregate and of the dominant cluster
/// against the ground-truth instance points; `None` for tracks the
/// generator did not produce or that never reached clustering.
pub fn segmentation_scores(analysis: &TrackAnalysis, gt: &GroundTruth) -> Option<(usize, f64, f64)> {
    if analysis.aggregate.is_empty() {
        return None;
    }
    let gi = gt.track_index(&analysis.label.track_id)?;
    let truth = gt_instance_points(gt, gi, &analysis.frames_used);
    let cluster = analysis.cluster.as_deref().unwrap_or(&[]);
    Some((
        cluster.len(),
        point_set_iou(&analysis.aggregate, &truth),
        point_set_iou(cluster, &truth),
    ))
}

/// Mean segmentation IoU over instances whose dominant cluster holds at
/// least each threshold's number of points.
pub fn segmentation_curve(analyses: &[TrackAnalysis], gt: &GroundTruth, thresholds: &[usize]) -> Vec<CurvePoint> {
    let scores: Vec<(usize, f64, f64)> = analyses.iter().filter_map(|a| segmentation_scores(a, gt)).collect();
    thresholds
        .iter()
        .map(|&t| {
            let kept: Vec<&(usize, f64, f64)> = scores.iter().filter(|s| s.0 >= t).collect();
            let agg: Vec<f64> = kept.iter().map(|s| s.1).collect();
            let clu: Vec<f64> = kept.iter().map(|s| s.2).collect();
            CurvePoint {
                min_points: t,
                retained: kept.len(),
                mean_iou_agg: mean(&agg),
                mean_iou_cluster: mean(&clu),
            }
        })
        .collect()
}

/// Ground-truth box a label is compared with: the box at the label's frame
/// for moving objects, else at the first frame the track was annotated in.
pub fn gt_box_for(gt: &GroundTruth, track_id: &str, frame_id: Option<u64>, fallback_frame: Option<u64>) -> Option<Box3D> {
    let track = gt.track(track_id)?;
    match frame_id.or(fallback_frame) {
        Some(f) => track.boxes.get(&f).copied(),
        None => track.boxes.values().next().copied(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassQuality {
    pub n_tracks: usize,
    pub n_kept: usize,
    /// Mean 3D IoU of the coarse boxes, before refinement.
    pub coarse_mean_iou: Option<f64>,
    /// Mean 3D IoU of labels with a refined box.
    pub refined_mean_iou: Option<f64>,
    /// Mean 3D IoU of kept labels.
    pub kept_mean_iou: Option<f64>,
}

#[derive(Default)]
struct QualityAcc {
    n_tracks: usize,
    n_kept: usize,
    coarse: Vec<f64>,
    refined: Vec<f64>,
    kept: Vec<f64>,
}

impl QualityAcc {
    fn finish(&self) -> ClassQuality {
        ClassQuality {
            n_tracks: self.n_tracks,
            n_kept: self.n_kept,
            coarse_mean_iou: mean(&self.coarse),
            refined_mean_iou: mean(&self.refined),
            kept_mean_iou: mean(&self.kept),
        }
    }
}

/// Per-class and overall 3D IoU of coarse, refined and kept labels.
/// `coarse` pairs each track id with its pre-refinement box.
pub fn coarse_quality_table(
    labels: &[PseudoLabel],
    coarse: &BTreeMap<String, (Box3D, Option<u64>)>,
    gt: &GroundTruth,
    first_frames: &BTreeMap<String, u64>,
) -> (BTreeMap<String, ClassQuality>, ClassQuality) {
    let mut per_class: BTreeMap<String, QualityAcc> = BTreeMap::new();
    let mut overall = QualityAcc::default();
    for label in labels {
        let first = first_frames.get(&label.track_id).copied();
        let acc = per_class.entry(label.class_label.clone()).or_default();
        acc.n_tracks += 1;
        overall.n_tracks += 1;
        if label.kept {
            acc.n_kept += 1;
            overall.n_kept += 1;
        }
        if let Some((b, frame)) = coarse.get(&label.track_id) {
            if let Some(truth) = gt_box_for(gt, &label.track_id, *frame, first) {
                let v = iou_3d(b, &truth);
                acc.coarse.push(v);
                overall.coarse.push(v);
            }
        }
        let Some(b) = label.bbox else { continue };
        let Some(truth) = gt_box_for(gt, &label.track_id, label.frame_id, first) else {
            continue;
        };
        let v = iou_3d(&b, &truth);
        if label.source == LabelSource::Refined {
            acc.refined.push(v);
            overall.refined.push(v);
        }
        if label.kept {
            acc.kept.push(v);
            overall.kept.push(v);
        }
    }
    (
        per_class.into_iter().map(|(c, a)| (c, a.finish())).collect(),
        overall.finish(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesHistogram {
    /// Number of tracks per count of annotated frames.
    pub counts: BTreeMap<usize, usize>,
    pub median: f64,
}

/// Distribution of annotated-frame counts per track, per class. Classes
/// without tracks are absent.
pub fn frames_histogram(scene: &Scene) -> BTreeMap<String, FramesHistogram> {
    let mut frames: BTreeMap<(&str, &str), BTreeSet<u64>> = BTreeMap::new();
    for f in &scene.frames {
        for a in &f.annotations {
            frames
                .entry((a.track_id.as_str(), a.class_label.as_str()))
                .or_default()
                .insert(f.frame_id);
        }
    }
    // a track counts under the class of its first annotation
    let mut per_track: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
    for ((track, class), set) in &frames {
        per_track
            .entry(track)
            .and_modify(|e| e.1 += set.len())
            .or_insert((class, set.len()));
    }
    let mut per_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (class, n) in per_track.into_values() {
        per_class.entry(class.to_string()).or_default().push(n);
    }
    per_class
        .into_iter()
        .map(|(class, mut ns)| {
            ns.sort_unstable();
            let mut counts = BTreeMap::new();
            for &n in &ns {
                *counts.entry(n).or_default() += 1;
            }
            let median = median(&ns).expect("class has at least one track");
            (class, FramesHistogram { counts, median })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSummary {
    pub n_tracks: usize,
    pub n_correct: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scene_id: String,
    pub seed: Option<u64>,
    pub config: PipelineConfig,
    pub n_tracks: usize,
    pub n_labels: usize,
    pub keep_rate: f64,
    pub classes: BTreeMap<String, ClassQuality>,
    pub overall: ClassQuality,
    pub motion: MotionSummary,
    pub segmentation_curve: Vec<CurvePoint>,
    pub frames_histogram: BTreeMap<String, FramesHistogram>,
}

/// Label track ids must match the dataset's annotated tracks one to one.
pub fn check_track_ids(scene: &Scene, labels: &[PseudoLabel]) -> Result<()> {
    let expected: BTreeSet<String> = scene.annotated_track_ids().into_iter().collect();
    let got: BTreeSet<String> = labels.iter().map(|l| l.track_id.clone()).collect();
    let missing: Vec<&String> = expected.difference(&got).collect();
    let unknown: Vec<&String> = got.difference(&expected).collect();
    let mut problems = Vec::new();
    if !missing.is_empty() {
        problems.push(format!("no label for tracks {missing:?}"));
    }
    if !unknown.is_empty() {
        problems.push(format!("labels for tracks not in the dataset {unknown:?}"));
    }
    if got.len() != labels.len() {
        problems.push("duplicate track ids in labels".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

/// Scores `labels` against the scene's ground truth. The pipeline is re-run
/// with `cfg` to recover coarse boxes and cluster memberships.
pub fn evaluate(scene: &Scene, labels: &[PseudoLabel], cfg: &PipelineConfig, thresholds: &[usize]) -> Result<EvalReport> {
    let gt = scene
        .gt_tracks
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no ground truth to evaluate against".into()))?;
    check_track_ids(scene, labels)?;
    let analyses = analyze_scene(scene, cfg)?;

    let mut coarse = BTreeMap::new();
    let mut first_frames = BTreeMap::new();
    let (mut n_motion, mut n_motion_ok) = (0, 0);
    for a in &analyses {
        if let Some(&f) = a.frames_used.first() {
            first_frames.insert(a.label.track_id.clone(), f);
        }
        if let Some(c) = &a.coarse {
            coarse.insert(a.label.track_id.clone(), (c.bbox, a.label.frame_id));
        }
        if let (Some(m), Some(t)) = (&a.motion, gt.track(&a.label.track_id)) {
            n_motion += 1;
            if (m.state == MotionState::Static) == t.is_static {
                n_motion_ok += 1;
            }
        }
    }
    let (classes, overall) = coarse_quality_table(labels, &coarse, gt, &first_frames);
    let n_kept = labels.iter().filter(|l| l.kept).count();
    Ok(EvalReport {
        scene_id: scene.scene_id.clone(),
        seed: scene.generator.as_ref().map(|g| g.seed),
        config: cfg.clone(),
        n_tracks: analyses.len(),
        n_labels: labels.len(),
        keep_rate: if labels.is_empty() { 0.0 } else { n_kept as f64 / labels.len() as f64 },
        classes,
        overall,
        motion: MotionSummary {
            n_tracks: n_motion,
            n_correct: n_motion_ok,
            accuracy: (n_motion > 0).then(|| n_motion_ok as f64 / n_motion as f64),
        },
        segmentation_curve: segmentation_curve(&analyses, gt, thresholds),
        frames_histogram: frames_histogram(scene),
    })
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    bytes.push(b'\n');
    crate::scene::write_atomic(path, &bytes)
}
