//! Property checks, one function per invariant. Each runs `cases`
//! deterministic proptest cases and reports the first failure.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use autolabel3d::cluster::{aggregate_static, dbscan, quality_gate, select_dominant_cluster, NOISE};
use autolabel3d::coarse::{fit_coarse_box, verify_geometry};
use autolabel3d::config::{PipelineConfig, VerifyMetric};
use autolabel3d::eval::{evaluate, segmentation_curve, DEFAULT_THRESHOLDS};
use autolabel3d::extract::{build_tracks, classify_motion, extract_indices, MotionState};
use autolabel3d::geom::{
    convex_hull, convex_intersection_area, giou_2d, iou_3d, pca_2d, Box2D, Box3D, CameraIntrinsics, CameraModel,
    Point2, Point3, Pose,
};
use autolabel3d::refine::{
    analyze_scene, annotate_scene, filter_pseudo_label, l2d_multiview, l2d_term, l2d_views, objective, refine_box,
    FilterThresholds, FilterVerdict, ObjectiveWeights, RefineOptions, TrackAnalysis,
};
use autolabel3d::scene::{generate_scene, save_scene, Annotation2D, Bitmap, Frame, Mask, Scene, SceneConfig};
use nalgebra::{UnitQuaternion, Vector2, Vector3};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{brute_dbscan, camera_looking, dir_bytes, inside, same_partition, tiny_config};

pub type Check = fn(u32) -> Result<(), String>;

/// Every invariant with its name, in module order.
pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("pose_compose_apply", pose_compose_apply),
        ("pose_rotation_and_inverse", pose_rotation_and_inverse),
        ("box3d_parameters_valid", box3d_parameters_valid),
        ("box2d_ordering", box2d_ordering),
        ("intrinsics_positive", intrinsics_positive),
        ("giou_range_symmetry", giou_range_symmetry),
        ("hull_contains_inputs", hull_contains_inputs),
        ("intersection_area_bounds", intersection_area_bounds),
        ("iou3d_rigid_invariance", iou3d_rigid_invariance),
        ("pca_rotation_equivariance", pca_rotation_equivariance),
        ("annotations_equal_projection", annotations_equal_projection),
        ("points_within_three_sigma", points_within_three_sigma),
        ("generator_deterministic", generator_deterministic),
        ("mask_runs_cover_image", mask_runs_cover_image),
        ("frames_ordered", frames_ordered),
        ("annotations_inside_image", annotations_inside_image),
        ("extraction_order_independent", extraction_order_independent),
        ("extraction_mask_monotone", extraction_mask_monotone),
        ("motion_rigid_invariance", motion_rigid_invariance),
        ("motion_threshold", motion_threshold),
        ("tracks_well_formed", tracks_well_formed),
        ("dbscan_matches_reference", dbscan_matches_reference),
        ("cluster_labels_partition", cluster_labels_partition),
        ("quality_gate_monotone", quality_gate_monotone),
        ("aggregate_counts", aggregate_counts),
        ("coarse_contains_points", coarse_contains_points),
        ("coarse_fit_equivariant", coarse_fit_equivariant),
        ("hull_iou_range", hull_iou_range),
        ("l2d_zero_at_ground_truth", l2d_zero_at_ground_truth),
        ("refine_never_increases_objective", refine_never_increases_objective),
        ("l2d_view_averaging", l2d_view_averaging),
        ("filter_monotone_in_confidence", filter_monotone_in_confidence),
        ("weight_scaling_keeps_argmin", weight_scaling_keeps_argmin),
        ("config_thresholds_in_unit_interval", config_thresholds_in_unit_interval),
        ("dropped_labels_carry_reason", dropped_labels_carry_reason),
        ("segmentation_curve_non_increasing", segmentation_curve_non_increasing),
        ("report_values_in_unit_interval", report_values_in_unit_interval),
    ]
}

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: cases.saturating_mul(20),
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn vec2(r: f64) -> impl Strategy<Value = Point2> {
    (-r..r, -r..r).prop_map(|(x, y)| Vector2::new(x, y))
}

fn pose() -> impl Strategy<Value = Pose> {
    (-PI..PI, -PI..PI, -PI..PI, vec3(50.0))
        .prop_map(|(r, p, y, t)| Pose::new(UnitQuaternion::from_euler_angles(r, p, y), t))
}

fn box3d() -> impl Strategy<Value = Box3D> {
    (vec3(10.0), 0.2..6.0, 0.2..4.0, 0.2..3.0, -PI..PI)
        .prop_map(|(c, l, w, h, yaw)| Box3D::new(c, l, w, h, yaw).unwrap())
}

fn box2d() -> impl Strategy<Value = Box2D> {
    (-100.0..100.0, -100.0..100.0, 0.1..80.0, 0.1..80.0)
        .prop_map(|(x, y, w, h): (f64, f64, f64, f64)| Box2D::new(x, y, x + w, y + h).unwrap())
}

fn yaw_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn scene_from_seed(seed: u64) -> Scene {
    generate_scene(&tiny_config(seed)).expect("tiny scene")
}

// ---- geometry

pub fn pose_compose_apply(cases: u32) -> Result<(), String> {
    run(cases, (pose(), pose(), vec3(100.0)), |(p, q, x)| {
        let lhs = p.compose(&q).apply(&x);
        let rhs = p.apply(&q.apply(&x));
        prop_assert!((lhs - rhs).norm() < 1e-9, "{lhs} vs {rhs}");
        Ok(())
    })
}

pub fn pose_rotation_and_inverse(cases: u32) -> Result<(), String> {
    run(cases, (pose(), vec3(100.0)), |(p, x)| {
        let r = p.rotation_matrix();
        prop_assert!((r * r.transpose() - nalgebra::Matrix3::identity()).norm() < 1e-9);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        let id = p.compose(&p.inverse());
        prop_assert!((id.apply(&x) - x).norm() < 1e-9);
        prop_assert!((id.rotation_matrix() - nalgebra::Matrix3::identity()).norm() < 1e-9);
        Ok(())
    })
}

pub fn box3d_parameters_valid(cases: u32) -> Result<(), String> {
    run(cases, (vec3(10.0), -1.0..5.0, -1.0..5.0, -1.0..5.0, -20.0..20.0), |(c, l, w, h, yaw)| {
        match Box3D::new(c, l, w, h, yaw) {
            Ok(b) => {
                prop_assert!(l > 0.0 && w > 0.0 && h > 0.0);
                prop_assert!(b.yaw > -PI && b.yaw <= PI);
                prop_assert!(yaw_mod_pi(b.yaw, yaw) < 1e-9 && (b.yaw - yaw).rem_euclid(2.0 * PI).min(
                    2.0 * PI - (b.yaw - yaw).rem_euclid(2.0 * PI)
                ) < 1e-9);
            }
            Err(_) => prop_assert!(l <= 0.0 || w <= 0.0 || h <= 0.0),
        }
        Ok(())
    })
}

pub fn box2d_ordering(cases: u32) -> Result<(), String> {
    run(cases, (-50.0..50.0, -50.0..50.0, -50.0..50.0, -50.0..50.0), |(a, b, c, d)| {
        prop_assert_eq!(Box2D::new(a, b, c, d).is_ok(), a < c && b < d);
        Ok(())
    })
}

pub fn intrinsics_positive(cases: u32) -> Result<(), String> {
    run(cases, (-10.0..10.0, -10.0..10.0, 0u32..3, 0u32..3), |(fx, fy, width, height)| {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx: 1.0,
            cy: 1.0,
            width,
            height,
        };
        prop_assert_eq!(k.validate().is_ok(), fx > 0.0 && fy > 0.0 && width > 0 && height > 0);
        Ok(())
    })
}

pub fn giou_range_symmetry(cases: u32) -> Result<(), String> {
    run(cases, (box2d(), box2d()), |(a, b)| {
        let g = giou_2d(&a, &b);
        prop_assert!(g > -1.0 && g <= 1.0, "giou {g}");
        prop_assert!((giou_2d(&a, &a) - 1.0).abs() < 1e-12);
        prop_assert_eq!(g, giou_2d(&b, &a));
        Ok(())
    })
}

pub fn hull_contains_inputs(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(vec2(10.0), 3..60), |pts| {
        let Ok(hull) = convex_hull(&pts) else {
            return Ok(());
        };
        for p in &pts {
            prop_assert!(hull.contains(p, 1e-9), "{p} outside hull");
        }
        prop_assert!(hull.is_convex_ccw());
        let v = hull.vertices();
        for k in 0..v.len() {
            prop_assert!((v[k] - v[(k + 1) % v.len()]).norm() > 1e-9);
        }
        Ok(())
    })
}

pub fn intersection_area_bounds(cases: u32) -> Result<(), String> {
    let poly = || prop::collection::vec(vec2(5.0), 3..20);
    run(cases, (poly(), poly(), vec2(3.0)), |(a, b, shift)| {
        let b: Vec<Point2> = b.iter().map(|p| p + shift).collect();
        let (Ok(a), Ok(b)) = (convex_hull(&a), convex_hull(&b)) else {
            return Ok(());
        };
        let ab = convex_intersection_area(&a, &b);
        let ba = convex_intersection_area(&b, &a);
        prop_assert!(ab <= a.area().min(b.area()) + 1e-9);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-9);
        Ok(())
    })
}

pub fn iou3d_rigid_invariance(cases: u32) -> Result<(), String> {
    run(cases, (box3d(), box3d(), -PI..PI, vec3(30.0)), |(a, b, phi, t)| {
        let move_box = |x: &Box3D| {
            let (s, c) = phi.sin_cos();
            let center = Vector3::new(c * x.cx - s * x.cy, s * x.cx + c * x.cy, x.cz) + t;
            Box3D::new(center, x.l, x.w, x.h, x.yaw + phi).unwrap()
        };
        let before = iou_3d(&a, &b);
        let after = iou_3d(&move_box(&a), &move_box(&b));
        prop_assert!((before - after).abs() < 1e-9, "{before} vs {after}");
        Ok(())
    })
}

pub fn pca_rotation_equivariance(cases: u32) -> Result<(), String> {
    let cloud = (1.0f64..4.0, 0.1f64..0.5, -PI..PI, any::<u64>());
    run(cases, (cloud, -PI..PI), |((sx, sy, base, seed), phi)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, c) = base.sin_cos();
        let pts: Vec<Point2> = (0..80)
            .map(|_| {
                let (u, v) = (rng.random_range(-sx..sx), rng.random_range(-sy..sy));
                Vector2::new(c * u - s * v, s * u + c * v)
            })
            .collect();
        let (s2, c2) = phi.sin_cos();
        let rotated: Vec<Point2> = pts.iter().map(|p| Vector2::new(c2 * p.x - s2 * p.y, s2 * p.x + c2 * p.y)).collect();
        let (v1, _) = pca_2d(&pts).unwrap();
        let (w1, _) = pca_2d(&rotated).unwrap();
        let a = v1.y.atan2(v1.x);
        let b = w1.y.atan2(w1.x);
        prop_assert!(yaw_mod_pi(b, a + phi) < 1e-6, "{a} {b} {phi}");
        Ok(())
    })
}

// ---- scene

pub fn annotations_equal_projection(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        let gt = scene.gt_tracks.as_ref().unwrap();
        for f in &scene.frames {
            for a in &f.annotations {
                let camera = scene.camera(f, &a.camera_id).unwrap();
                let b = gt.track(&a.track_id).unwrap().boxes[&f.frame_id];
                prop_assert_eq!(camera.project_box3d(&b), Some(a.bbox));
            }
        }
        Ok(())
    })
}

static SIGMA_TOTAL: AtomicUsize = AtomicUsize::new(0);
static SIGMA_INSIDE: AtomicUsize = AtomicUsize::new(0);

/// Per case, no point strays beyond 6σ; pooled over all cases, at least 99%
/// lie within 3σ of their box.
pub fn points_within_three_sigma(cases: u32) -> Result<(), String> {
    SIGMA_TOTAL.store(0, Ordering::SeqCst);
    SIGMA_INSIDE.store(0, Ordering::SeqCst);
    run(cases, any::<u64>(), |seed| {
        let cfg = tiny_config(seed);
        let scene = generate_scene(&cfg).unwrap();
        let gt = scene.gt_tracks.as_ref().unwrap();
        let grow = |b: &Box3D, k: f64| Box3D {
            l: b.l + 2.0 * k * cfg.noise_sigma,
            w: b.w + 2.0 * k * cfg.noise_sigma,
            h: b.h + 2.0 * k * cfg.noise_sigma,
            ..*b
        };
        for f in &scene.frames {
            let labels = gt.points_for(f.frame_id).unwrap();
            for (i, p) in f.world_points().enumerate() {
                if labels.instance[i] < 0 || labels.face[i] < 0 {
                    continue;
                }
                let b = gt.tracks[labels.instance[i] as usize].boxes[&f.frame_id];
                prop_assert!(inside(&grow(&b, 6.0), &p), "point {p} far outside {b:?}");
                SIGMA_TOTAL.fetch_add(1, Ordering::SeqCst);
                if inside(&grow(&b, 3.0), &p) {
                    SIGMA_INSIDE.fetch_add(1, Ordering::SeqCst);
                }
            }
        }
        Ok(())
    })?;
    let (n, k) = (SIGMA_TOTAL.load(Ordering::SeqCst), SIGMA_INSIDE.load(Ordering::SeqCst));
    if n == 0 || (k as f64) < 0.99 * n as f64 {
        return Err(format!("{k} of {n} points within 3 sigma"));
    }
    Ok(())
}

pub fn generator_deterministic(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let tmp = tempfile::tempdir().unwrap();
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        save_scene(&scene_from_seed(seed), &a).unwrap();
        save_scene(&scene_from_seed(seed), &b).unwrap();
        prop_assert!(dir_bytes(&a) == dir_bytes(&b));
        Ok(())
    })
}

fn random_bitmap(width: u32, height: u32, density: f64, seed: u64) -> Bitmap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bm = Bitmap::new(width, height);
    for r in 0..height {
        for c in 0..width {
            if rng.random_bool(density) {
                bm.set(c, r, true);
            }
        }
    }
    bm
}

pub fn mask_runs_cover_image(cases: u32) -> Result<(), String> {
    run(cases, (1u32..40, 1u32..40, 0.0..1.0, any::<u64>()), |(w, h, density, seed)| {
        let bm = random_bitmap(w, h, density, seed);
        let mask = bm.encode();
        prop_assert_eq!(mask.rle.iter().map(|&r| r as u64).sum::<u64>(), (w * h) as u64);
        prop_assert_eq!(autolabel3d::scene::decode_mask(&mask).unwrap(), bm);
        Ok(())
    })
}

pub fn frames_ordered(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        for pair in scene.frames.windows(2) {
            prop_assert!(pair[0].frame_id < pair[1].frame_id);
            prop_assert!(pair[0].timestamp < pair[1].timestamp);
        }
        Ok(())
    })
}

pub fn annotations_inside_image(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        for f in &scene.frames {
            for a in &f.annotations {
                let rig = &scene.cameras[&a.camera_id];
                let b = a.bbox;
                prop_assert!(b.x_min >= 0.0 && b.y_min >= 0.0);
                prop_assert!(b.x_max <= rig.width as f64 && b.y_max <= rig.height as f64);
            }
        }
        Ok(())
    })
}

// ---- extraction and motion

/// Small camera at the origin looking along +x; masks stay tiny.
fn small_camera() -> CameraModel {
    let k = CameraIntrinsics {
        fx: 40.0,
        fy: 40.0,
        cx: 32.0,
        cy: 24.0,
        width: 64,
        height: 48,
    };
    CameraModel::new(k, Pose::camera_mount(0.0, Vector3::zeros())).unwrap()
}

fn frame_with(points: Vec<Point3>) -> Frame {
    Frame {
        frame_id: 0,
        timestamp: 0.0,
        world_from_ego: Pose::identity(),
        pointcloud: String::new(),
        annotations: vec![],
        points,
    }
}

fn annotation(bbox: Box2D, mask: Option<Mask>) -> Annotation2D {
    Annotation2D {
        track_id: "t".into(),
        class_label: "Car".into(),
        camera_id: "cam".into(),
        bbox,
        mask,
        mask_confidence: None,
    }
}

fn cloud() -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(
        (-2.0..20.0, -10.0..10.0, -6.0..6.0).prop_map(|(x, y, z)| Vector3::new(x, y, z)),
        0..200,
    )
}

pub fn extraction_order_independent(cases: u32) -> Result<(), String> {
    let region = (0.0..40.0, 0.0..30.0, 4.0..30.0, 4.0..20.0, prop::option::of(0.1..0.9));
    run(cases, (cloud(), region, any::<u64>()), |(points, (x, y, w, h, mask_density), seed)| {
        let camera = small_camera();
        let bbox = Box2D::new(x, y, x + w, y + h).unwrap();
        let mask = mask_density.map(|d| random_bitmap(64, 48, d, seed).encode());
        let ann = annotation(bbox, mask);
        let mut perm: Vec<usize> = (0..points.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Point3> = perm.iter().map(|&i| points[i]).collect();
        let a: BTreeSet<usize> = extract_indices(&frame_with(points), &ann, &camera, 0.6).unwrap().into_iter().collect();
        let b: BTreeSet<usize> = extract_indices(&frame_with(shuffled), &ann, &camera, 0.6)
            .unwrap()
            .into_iter()
            .map(|k| perm[k])
            .collect();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn extraction_mask_monotone(cases: u32) -> Result<(), String> {
    run(cases, (cloud(), 0.1..1.0, 0.0..1.0, any::<u64>()), |(points, density, keep, seed)| {
        let camera = small_camera();
        let bbox = Box2D::new(0.0, 0.0, 64.0, 48.0).unwrap();
        let full = random_bitmap(64, 48, density, seed);
        let mut shrunk = full.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for r in 0..48 {
            for c in 0..64 {
                if full.get(c, r) && !rng.random_bool(keep) {
                    shrunk.set(c, r, false);
                }
            }
        }
        let frame = frame_with(points);
        let big: BTreeSet<usize> = extract_indices(&frame, &annotation(bbox, Some(full.encode())), &camera, 0.6)
            .unwrap()
            .into_iter()
            .collect();
        let small = extract_indices(&frame, &annotation(bbox, Some(shrunk.encode())), &camera, 0.6).unwrap();
        prop_assert!(small.iter().all(|i| big.contains(i)));
        Ok(())
    })
}

pub fn motion_rigid_invariance(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(vec3(2.0), 1..10), pose(), 0.05..2.0), |(cs, p, tau)| {
        let a = classify_motion(&cs, tau);
        let moved: Vec<Point3> = cs.iter().map(|c| p.apply(c)).collect();
        let b = classify_motion(&moved, tau);
        prop_assume!((a.max_pairwise_displacement - tau).abs() > 1e-9);
        prop_assert_eq!(a.state, b.state);
        prop_assert!((a.max_pairwise_displacement - b.max_pairwise_displacement).abs() < 1e-9);
        Ok(())
    })
}

pub fn motion_threshold(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(vec3(1.0), 1..10), 0.05..2.0), |(cs, tau)| {
        let v = classify_motion(&cs, tau);
        let mut d = 0.0f64;
        for a in &cs {
            for b in &cs {
                d = d.max((a - b).norm());
            }
        }
        prop_assert!((v.max_pairwise_displacement - d).abs() < 1e-12);
        prop_assert_eq!(v.n_observations, cs.len());
        if cs.len() >= 2 {
            prop_assert_eq!(v.state == MotionState::Static, d < tau);
        } else {
            prop_assert!(v.low_evidence && v.state == MotionState::Static);
        }
        Ok(())
    })
}

pub fn tracks_well_formed(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        let tracks = build_tracks(&scene, &PipelineConfig::default()).unwrap();
        let ids: Vec<String> = tracks.iter().map(|t| t.track_id.clone()).collect();
        prop_assert_eq!(ids, scene.annotated_track_ids());
        for t in &tracks {
            prop_assert!(!t.observations.is_empty());
            let f = t.frame_ids();
            prop_assert!(f.windows(2).all(|w| w[0] < w[1]));
            let annotated: BTreeSet<u64> = scene
                .frames
                .iter()
                .filter(|fr| fr.annotations.iter().any(|a| a.track_id == t.track_id))
                .map(|fr| fr.frame_id)
                .collect();
            prop_assert_eq!(f.into_iter().collect::<BTreeSet<_>>(), annotated);
        }
        Ok(())
    })
}

// ---- clustering

fn blobs() -> impl Strategy<Value = Vec<Point3>> {
    (1usize..5, any::<u64>(), 0usize..200, 0.1f64..1.0).prop_map(|(k, seed, n, spread)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Point3> = (0..k)
            .map(|_| Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)))
            .collect();
        (0..n)
            .map(|i| {
                let c = centers[i % k];
                c + Vector3::new(
                    rng.random_range(-spread..spread),
                    rng.random_range(-spread..spread),
                    rng.random_range(-spread..spread),
                )
            })
            .collect()
    })
}

pub fn dbscan_matches_reference(cases: u32) -> Result<(), String> {
    run(cases, (blobs(), 0.05..1.0, 1usize..15), |(pts, eps, min_pts)| {
        let got = dbscan(&pts, eps, min_pts);
        let want = brute_dbscan(&pts, eps, min_pts);
        prop_assert!(same_partition(&got, &want), "{got:?} vs {want:?}");
        Ok(())
    })
}

pub fn cluster_labels_partition(cases: u32) -> Result<(), String> {
    run(cases, (blobs(), 0.05..1.0, 1usize..15), |(pts, eps, min_pts)| {
        let labels = dbscan(&pts, eps, min_pts);
        prop_assert_eq!(labels.len(), pts.len());
        let ids: BTreeSet<i32> = labels.iter().copied().filter(|&l| l != NOISE).collect();
        prop_assert!(labels.iter().all(|&l| l >= NOISE));
        // ids are 0..k with no gaps
        prop_assert!(ids.iter().copied().eq(0..ids.len() as i32));
        match select_dominant_cluster(&pts, &labels) {
            Ok(c) => {
                prop_assert!(!c.indices.is_empty());
                prop_assert!(c.indices.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(c.indices.iter().all(|&i| i < pts.len() && labels[i] == c.cluster_id));
                let size = labels.iter().filter(|&&l| l == c.cluster_id).count();
                prop_assert_eq!(size, c.indices.len());
                let largest = ids.iter().map(|&id| labels.iter().filter(|&&l| l == id).count()).max().unwrap();
                prop_assert_eq!(size, largest);
            }
            Err(_) => prop_assert!(ids.is_empty()),
        }
        Ok(())
    })
}

pub fn quality_gate_monotone(cases: u32) -> Result<(), String> {
    run(cases, (0usize..100, 0usize..10, 0usize..50, 0usize..5, 0usize..50), |(n, views, min_n, min_v, extra)| {
        if quality_gate(n, views, min_n, min_v).is_ok() {
            prop_assert!(quality_gate(n + extra, views, min_n, min_v).is_ok());
        }
        prop_assert_eq!(quality_gate(n, views, min_n, min_v).is_ok(), n >= min_n && views >= min_v);
        Ok(())
    })
}

pub fn aggregate_counts(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        for t in build_tracks(&scene, &PipelineConfig::default()).unwrap() {
            let total: usize = t.observations.iter().map(|o| o.points.len()).sum();
            match aggregate_static(&t) {
                Ok(agg) => {
                    prop_assert_eq!(agg.points_agg.len(), total);
                    prop_assert_eq!(agg.n_views(), t.n_views());
                    prop_assert_eq!(agg.provenance.len(), total);
                    for o in &t.observations {
                        let per = agg.per_view_points(o.frame_id).map_or(0, |p| p.len());
                        prop_assert_eq!(per, o.points.len());
                    }
                }
                Err(_) => prop_assert_eq!(total, 0),
            }
        }
        Ok(())
    })
}

// ---- coarse fit

fn anisotropic_cloud() -> impl Strategy<Value = Vec<Point3>> {
    (1.0f64..4.0, 0.1f64..0.6, 0.2f64..2.0, -PI..PI, vec3(20.0), any::<u64>(), 10usize..150).prop_map(
        |(sx, sy, sz, yaw, c, seed, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (s, co) = yaw.sin_cos();
            (0..n)
                .map(|_| {
                    let (u, v) = (rng.random_range(-sx..sx), rng.random_range(-sy..sy));
                    c + Vector3::new(co * u - s * v, s * u + co * v, rng.random_range(-sz..sz))
                })
                .collect()
        },
    )
}

pub fn coarse_contains_points(cases: u32) -> Result<(), String> {
    let any_cloud = prop::collection::vec(vec3(5.0), 3..80);
    run(cases, prop_oneof![any_cloud, anisotropic_cloud()], |pts| {
        let Ok(fit) = fit_coarse_box(&pts, 0.05) else {
            return Ok(());
        };
        let b = fit.bbox;
        let footprint = b.footprint();
        for p in &pts {
            prop_assert!(footprint.contains(&p.xy(), 1e-9), "{p} outside footprint");
            prop_assert!(p.z >= b.z_min() - 1e-9 && p.z <= b.z_max() + 1e-9);
        }
        Ok(())
    })
}

pub fn coarse_fit_equivariant(cases: u32) -> Result<(), String> {
    run(cases, (anisotropic_cloud(), -PI..PI, vec2(30.0)), |(pts, phi, t)| {
        let (s, c) = phi.sin_cos();
        let moved: Vec<Point3> =
            pts.iter().map(|p| Vector3::new(c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y, p.z)).collect();
        let a = fit_coarse_box(&pts, 0.05).unwrap().bbox;
        let b = fit_coarse_box(&moved, 0.05).unwrap().bbox;
        let expected = Vector2::new(c * a.cx - s * a.cy + t.x, s * a.cx + c * a.cy + t.y);
        prop_assert!((Vector2::new(b.cx, b.cy) - expected).norm() < 1e-6);
        prop_assert!((b.cz - a.cz).abs() < 1e-6);
        prop_assert!((b.l - a.l).abs() < 1e-6 && (b.w - a.w).abs() < 1e-6 && (b.h - a.h).abs() < 1e-6);
        prop_assert!(yaw_mod_pi(b.yaw, a.yaw + phi) < 1e-6);
        Ok(())
    })
}

pub fn hull_iou_range(cases: u32) -> Result<(), String> {
    let cloud = prop_oneof![prop::collection::vec(vec3(5.0), 3..80), anisotropic_cloud()];
    run(cases, (cloud, box3d(), 0.0..1.0), |(pts, b, tau)| {
        if let Ok(fit) = fit_coarse_box(&pts, 0.05) {
            let bev: Vec<Point2> = pts.iter().map(|p| p.xy()).collect();
            if let Ok(r) = verify_geometry(&fit, &bev, tau, VerifyMetric::Iou) {
                prop_assert!((0.0..=1.0).contains(&r.hull_iou));
                prop_assert_eq!(r.verified, r.hull_iou > tau);
            }
        }
        // corners of a box: hull and footprint coincide
        let corners: Vec<Point3> = b.corners().to_vec();
        let fit = fit_coarse_box(&corners, 0.05).unwrap();
        let bev: Vec<Point2> = corners.iter().map(|p| p.xy()).collect();
        let r = verify_geometry(&fit, &bev, tau, VerifyMetric::Iou).unwrap();
        prop_assert!((r.hull_iou - 1.0).abs() < 1e-9, "hull_iou {}", r.hull_iou);
        Ok(())
    })
}

// ---- refinement and filtering

pub fn l2d_zero_at_ground_truth(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let cfg = SceneConfig {
            noise_sigma: 0.0,
            ..tiny_config(seed)
        };
        let scene = generate_scene(&cfg).unwrap();
        let gt = scene.gt_tracks.as_ref().unwrap();
        for t in build_tracks(&scene, &PipelineConfig::default()).unwrap() {
            let g = gt.track(&t.track_id).unwrap();
            if g.is_static {
                let b = g.boxes[&t.observations[0].frame_id];
                let l = l2d_multiview(&b, &t);
                prop_assert!(l.abs() < 1e-9, "{} l2d {l}", t.track_id);
            } else {
                for o in &t.observations {
                    let l = l2d_term(&g.boxes[&o.frame_id], &o.camera, &o.annotation.bbox);
                    prop_assert!(l.abs() < 1e-9, "{} frame {} l2d {l}", t.track_id, o.frame_id);
                }
            }
        }
        Ok(())
    })
}

/// Cameras around `b` at 8–20 m looking at its center.
fn views_around(b: &Box3D, bearings: &[f64], dist: f64) -> Vec<CameraModel> {
    bearings
        .iter()
        .map(|&a| {
            let pos = Vector3::new(b.cx + dist * a.cos(), b.cy + dist * a.sin(), b.cz + 0.5);
            camera_looking(a + PI, pos)
        })
        .collect()
}

fn surface_points(b: &Box3D, n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut q = Vector3::new(
                rng.random_range(-0.5..0.5) * b.l,
                rng.random_range(-0.5..0.5) * b.w,
                rng.random_range(-0.5..0.5) * b.h,
            );
            let k = rng.random_range(0..3);
            q[k] = if rng.random::<bool>() { 0.5 } else { -0.5 } * b.extents()[k];
            b.to_world(&q)
        })
        .collect()
}

type RefineCase = (Box3D, Vec<f64>, f64, [f64; 7], u64);

fn refine_case() -> impl Strategy<Value = RefineCase> {
    (
        box3d(),
        prop::collection::vec(-PI..PI, 0..4),
        8.0..20.0,
        (-0.5..0.5, -0.5..0.5, -0.2..0.2, 0.8..1.2, 0.8..1.2, 0.8..1.2, -0.3..0.3),
        any::<u64>(),
    )
        .prop_map(|(b, bearings, dist, (a, bb, c, d, e, f, g), seed)| (b, bearings, dist, [a, bb, c, d, e, f, g], seed))
}

fn perturb(b: &Box3D, p: &[f64; 7]) -> Box3D {
    Box3D::new(b.center() + Vector3::new(p[0], p[1], p[2]), b.l * p[3], b.w * p[4], b.h * p[5], b.yaw + p[6]).unwrap()
}

pub fn refine_never_increases_objective(cases: u32) -> Result<(), String> {
    run(cases, (refine_case(), 0usize..300), |((truth, bearings, dist, p, seed), budget)| {
        let cams = views_around(&truth, &bearings, dist);
        let boxes: Vec<Option<Box2D>> = cams.iter().map(|c| c.project_box3d(&truth)).collect();
        let views: Vec<(&CameraModel, &Box2D)> =
            cams.iter().zip(&boxes).filter_map(|(c, b)| b.as_ref().map(|b| (c, b))).collect();
        let points = surface_points(&truth, 40, seed);
        let init = perturb(&truth, &p);
        let weights = ObjectiveWeights::default();
        let opts = RefineOptions {
            budget,
            ..Default::default()
        };
        let out = refine_box(&init, &points, &views, &weights, &opts);
        let j0 = objective(&init, &points, &views, &weights);
        let j1 = objective(&out.bbox, &points, &views, &weights);
        prop_assert!(j1 <= j0, "J rose from {j0} to {j1}");
        if budget == 0 {
            prop_assert_eq!(out.bbox, init);
        }
        Ok(())
    })
}

pub fn l2d_view_averaging(cases: u32) -> Result<(), String> {
    run(cases, (box3d(), box3d(), prop::collection::vec(-PI..PI, 2..8), 6.0..25.0), |(b, target, bearings, dist)| {
        let cams = views_around(&target, &bearings, dist);
        let boxes: Vec<Box2D> = cams.iter().map(|c| c.project_box3d(&target).unwrap_or(Box2D::new(0.0, 0.0, 10.0, 10.0).unwrap())).collect();
        let all: Vec<(&CameraModel, &Box2D)> = cams.iter().zip(&boxes).collect();
        let n = all.len() - 1;
        let old = l2d_views(&b, all[..n].iter().copied());
        let new = l2d_term(&b, all[n].0, all[n].1);
        let combined = l2d_views(&b, all.iter().copied());
        prop_assert!(new >= 0.0);
        prop_assert!((combined - (n as f64 * old + new) / (n as f64 + 1.0)).abs() < 1e-12);
        Ok(())
    })
}

const CLASSES: [&str; 4] = ["Car", "Pedestrian", "Barrier", "Cyclist"];

pub fn filter_monotone_in_confidence(cases: u32) -> Result<(), String> {
    run(cases, (0usize..4, 0usize..4, 0.0f64..1.0, 0.0f64..1.0), |(p, a, c1, c2)| {
        let t = FilterThresholds::default();
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        if filter_pseudo_label(CLASSES[p], CLASSES[a], lo, &t).verdict == FilterVerdict::Keep {
            prop_assert_eq!(filter_pseudo_label(CLASSES[p], CLASSES[a], hi, &t).verdict, FilterVerdict::Keep);
        }
        Ok(())
    })
}

pub fn weight_scaling_keeps_argmin(cases: u32) -> Result<(), String> {
    run(cases, (refine_case(), -3i32..4, 0.0..2.0, 0.0..2.0), |((truth, bearings, dist, p, seed), k, lam, mu)| {
        let cams = views_around(&truth, &bearings, dist);
        let boxes: Vec<Option<Box2D>> = cams.iter().map(|c| c.project_box3d(&truth)).collect();
        let views: Vec<(&CameraModel, &Box2D)> =
            cams.iter().zip(&boxes).filter_map(|(c, b)| b.as_ref().map(|b| (c, b))).collect();
        let points = surface_points(&truth, 30, seed);
        let init = perturb(&truth, &p);
        let opts = RefineOptions {
            budget: 200,
            ..Default::default()
        };
        let s = 2f64.powi(k);
        let w1 = ObjectiveWeights { lambda_2d: lam, mu_fit: mu };
        let w2 = ObjectiveWeights {
            lambda_2d: s * lam,
            mu_fit: s * mu,
        };
        let a = refine_box(&init, &points, &views, &w1, &opts);
        let b = refine_box(&init, &points, &views, &w2, &opts);
        prop_assert_eq!(a.bbox, b.bbox);
        prop_assert_eq!(a.evaluations, b.evaluations);
        Ok(())
    })
}

pub fn config_thresholds_in_unit_interval(cases: u32) -> Result<(), String> {
    run(cases, (-0.5..1.5, -0.5..1.5, -0.5..1.5), |(car, ped, default)| {
        let mut cfg = PipelineConfig {
            tau_conf_default: default,
            ..Default::default()
        };
        cfg.tau_conf.insert("Car".into(), car);
        cfg.tau_conf.insert("Pedestrian".into(), ped);
        let ok = [car, ped, default].iter().all(|t| (0.0..=1.0).contains(t));
        prop_assert_eq!(cfg.validate().is_ok(), ok);
        Ok(())
    })
}

fn quick_config() -> PipelineConfig {
    PipelineConfig {
        refine_budget: 100,
        ..Default::default()
    }
}

pub fn dropped_labels_carry_reason(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        for l in annotate_scene(&scene, &quick_config()).unwrap() {
            prop_assert_eq!(l.kept, l.drop_reason.is_none());
            if l.kept {
                prop_assert!(l.bbox.is_some());
            }
        }
        Ok(())
    })
}

fn reference_analyses() -> &'static (Scene, Vec<TrackAnalysis>) {
    static CELL: OnceLock<(Scene, Vec<TrackAnalysis>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let scene = generate_scene(&SceneConfig {
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let analyses = analyze_scene(&scene, &quick_config()).unwrap();
        (scene, analyses)
    })
}

pub fn segmentation_curve_non_increasing(cases: u32) -> Result<(), String> {
    let (scene, analyses) = reference_analyses();
    let gt = scene.gt_tracks.as_ref().unwrap();
    run(cases, prop::collection::vec(0usize..600, 1..12), |mut thresholds| {
        thresholds.sort_unstable();
        let curve = segmentation_curve(analyses, gt, &thresholds);
        prop_assert_eq!(curve.len(), thresholds.len());
        for pair in curve.windows(2) {
            prop_assert!(pair[1].retained <= pair[0].retained);
        }
        Ok(())
    })
}

pub fn report_values_in_unit_interval(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let scene = scene_from_seed(seed);
        let cfg = quick_config();
        let labels = annotate_scene(&scene, &cfg).unwrap();
        let report = evaluate(&scene, &labels, &cfg, &DEFAULT_THRESHOLDS).unwrap();
        let unit = |v: Option<f64>| v.is_none_or(|x| (0.0..=1.0).contains(&x));
        prop_assert!((0.0..=1.0).contains(&report.keep_rate));
        for q in report.classes.values().chain([&report.overall]) {
            prop_assert!(unit(q.coarse_mean_iou) && unit(q.refined_mean_iou) && unit(q.kept_mean_iou));
            prop_assert!(q.n_kept <= q.n_tracks);
        }
        prop_assert!(unit(report.motion.accuracy));
        for c in &report.segmentation_curve {
            prop_assert!(unit(c.mean_iou_agg) && unit(c.mean_iou_cluster));
        }
        Ok(())
    })
}
