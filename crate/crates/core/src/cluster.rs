//! Multi-view aggregation of static objects, DBSCAN cleaning and the
//! sparsity / view-count gate.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::extract::ObjectTrack;
use crate::geom::Point3;

/// Union of a static track's per-view points, with frame provenance.
#[derive(Debug, Clone)]
pub struct AggregatedInstance {
    pub track_id: String,
    pub class_label: String,
    pub points_agg: Vec<Point3>,
    /// `(frame_id, range into points_agg)` per contributing view, in frame order.
    pub views: Vec<(u64, Range<usize>)>,
    /// `(frame_id, index in that frame's cloud)` for every aggregated point.
    pub provenance: Vec<(u64, usize)>,
}

impl AggregatedInstance {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn per_view_points(&self, frame_id: u64) -> Option<&[Point3]> {
        self.views
            .iter()
            .find(|(f, _)| *f == frame_id)
            .map(|(_, r)| &self.points_agg[r.clone()])
    }
}

/// Concatenates the extracted points of every observation. Views with no
/// points do not count.
pub fn aggregate_static(track: &ObjectTrack) -> Result<AggregatedInstance> {
    let mut points_agg = Vec::new();
    let mut views = Vec::new();
    let mut provenance = Vec::new();
    for obs in &track.observations {
        if obs.points.is_empty() {
            continue;
        }
        let start = points_agg.len();
        points_agg.extend_from_slice(&obs.points);
        provenance.extend(obs.point_indices.iter().map(|&i| (obs.frame_id, i)));
        views.push((obs.frame_id, start..points_agg.len()));
    }
    if points_agg.is_empty() {
        return Err(Error::EmptyAggregate(track.track_id.clone()));
    }
    Ok(AggregatedInstance {
        track_id: track.track_id.clone(),
        class_label: track.class_label.clone(),
        points_agg,
        views,
        provenance,
    })
}

pub const NOISE: i32 = -1;

struct Grid<'a> {
    points: &'a [Point3],
    eps: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Point3], eps: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn key(p: &Point3, eps: f64) -> [i64; 3] {
        [
            (p.x / eps).floor() as i64,
            (p.y / eps).floor() as i64,
            (p.z / eps).floor() as i64,
        ]
    }

    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = &self.points[i];
        let k = Self::key(p, self.eps);
        let eps2 = self.eps * self.eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cell) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(
                            cell.iter()
                                .copied()
                                .filter(|&j| (self.points[j] - p).norm_squared() <= eps2),
                        );
                    }
                }
            }
        }
    }
}

/// DBSCAN with Euclidean distance. A point is core when at least `min_pts`
/// points (itself included) lie within `eps`. Cluster ids follow the order
/// of each cluster's first core point; a border point joins the first
/// cluster that reaches it; noise is [`NOISE`].
pub fn dbscan(points: &[Point3], eps: f64, min_pts: usize) -> Vec<i32> {
    assert!(eps > 0.0 && min_pts >= 1, "dbscan needs eps > 0 and min_pts >= 1");
    const UNSEEN: i32 = -2;
    let grid = Grid::new(points, eps);
    let mut labels = vec![UNSEEN; points.len()];
    let mut neigh = Vec::new();
    let mut next_id = 0;
    let mut queue = Vec::new();
    for i in 0..points.len() {
        if labels[i] != UNSEEN {
            continue;
        }
        grid.neighbors(i, &mut neigh);
        if neigh.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[i] = id;
        queue.clear();
        queue.extend_from_slice(&neigh);
        while let Some(q) = queue.pop() {
            match labels[q] {
                NOISE => labels[q] = id,
                UNSEEN => {
                    labels[q] = id;
                    grid.neighbors(q, &mut neigh);
                    if neigh.len() >= min_pts {
                        queue.extend_from_slice(&neigh);
                    }
                }
                _ => {}
            }
        }
    }
    labels
}

/// Dominant cluster C*.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanCluster {
    pub cluster_id: i32,
    /// Sorted indices into `points_agg`.
    pub indices: Vec<usize>,
    pub centroid: Point3,
}

fn coordinate_median(points: &[Point3]) -> Point3 {
    let mut out = Point3::zeros();
    for k in 0..3 {
        let mut v: Vec<f64> = points.iter().map(|p| p[k]).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        out[k] = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    }
    out
}

/// Largest cluster; ties go to the centroid nearest the coordinate-wise
/// median of all points, then to the lowest id.
pub fn select_dominant_cluster(points: &[Point3], labels: &[i32]) -> Result<CleanCluster> {
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            let l = l as usize;
            if members.len() <= l {
                members.resize(l + 1, Vec::new());
            }
            members[l].push(i);
        }
    }
    let centroid = |idx: &[usize]| idx.iter().map(|&i| points[i]).sum::<Point3>() / idx.len() as f64;
    let largest = members.iter().map(Vec::len).max().unwrap_or(0);
    if largest == 0 {
        return Err(Error::NoCluster);
    }
    let median = coordinate_median(points);
    let mut best: Option<(f64, usize)> = None;
    for (id, idx) in members.iter().enumerate() {
        if idx.len() != largest {
            continue;
        }
        let d = (centroid(idx) - median).norm_squared();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    let (_, id) = best.expect("at least one cluster of maximal size");
    let indices = std::mem::take(&mut members[id]);
    Ok(CleanCluster {
        cluster_id: id as i32,
        centroid: centroid(&indices),
        indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateFailure {
    Sparse,
    Views,
}

impl GateFailure {
    pub fn reason(self) -> &'static str {
        match self {
            GateFailure::Sparse => "sparse",
            GateFailure::Views => "views",
        }
    }
}

/// Rejects clusters with fewer than `min_points` points or instances seen
/// in fewer than `min_views` frames.
pub fn quality_gate(
    cluster_points: usize,
    n_views: usize,
    min_points: usize,
    min_views: usize,
) -> std::result::Result<(), GateFailure> {
    if cluster_points < min_points {
        Err(GateFailure::Sparse)
    } else if n_views < min_views {
        Err(GateFailure::Views)
    } else {
        Ok(())
    }
}
