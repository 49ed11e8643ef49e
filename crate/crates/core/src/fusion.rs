//! World-frame localization, radius-based deduplication across views and
//! best-view selection by fill ratio.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::formats::MeasurementRecord;
use crate::geometry::{deproject, CameraIntrinsics, GeometryError, Pixel, Point3, RigidTransform};
use crate::sizing::FittedCircle;

/// Metric radius from a pixel radius by similar triangles on `fx`.
pub fn estimate_metric_radius(
    circle: &FittedCircle,
    depth_m: f64,
    k: &CameraIntrinsics,
) -> Result<f64, GeometryError> {
    if !(depth_m > 0.0) || !depth_m.is_finite() {
        return Err(GeometryError::InvalidDepth(depth_m));
    }
    Ok(circle.r_px * depth_m / k.fx)
}

/// Fruit center in the world frame: the front-surface point under `center_px`
/// pushed back along its viewing ray by the fruit radius.
pub fn localize(
    center_px: &Pixel,
    median_depth_m: f64,
    radius_m: f64,
    k: &CameraIntrinsics,
    cam_to_world: &RigidTransform,
) -> Result<Point3, GeometryError> {
    let p = deproject(k, center_px, median_depth_m)?;
    let range = p.coords.norm();
    let pushed = Point3::from(p.coords * ((range + radius_m) / range));
    Ok(cam_to_world.apply(&pushed))
}

/// Which radius bounds a match between two detections of different size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchThreshold {
    #[default]
    Max,
    Min,
}

impl MatchThreshold {
    fn bound(self, a: f64, b: f64) -> f64 {
        match self {
            MatchThreshold::Max => a.max(b),
            MatchThreshold::Min => a.min(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedDetection {
    pub center_world: Point3,
    pub radius_m: f64,
    pub record: MeasurementRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldFruit {
    pub center_world: Point3,
    pub radius_m: f64,
    pub members: Vec<LocalizedDetection>,
    pub chosen: usize,
}

impl WorldFruit {
    pub fn chosen_record(&self) -> &MeasurementRecord {
        &self.members[self.chosen].record
    }
}

/// How the representative view of a cluster is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionPolicy {
    /// Camera ids in tie-break priority order (e.g. top, middle, bottom).
    pub camera_order: Vec<String>,
    /// When false, selection falls through to the tie-break order alone.
    pub by_fill_ratio: bool,
}

impl SelectionPolicy {
    pub fn fill_ratio(camera_order: Vec<String>) -> Self {
        Self { camera_order, by_fill_ratio: true }
    }

    fn camera_rank(&self, id: &str) -> usize {
        self.camera_order.iter().position(|c| c == id).unwrap_or(self.camera_order.len())
    }

    /// `Less` when `a` should be preferred over `b`.
    fn prefer(&self, a: &MeasurementRecord, b: &MeasurementRecord) -> Ordering {
        let by_fill = if self.by_fill_ratio {
            b.fill_ratio.total_cmp(&a.fill_ratio)
        } else {
            Ordering::Equal
        };
        by_fill
            .then_with(|| self.camera_rank(&a.camera_id).cmp(&self.camera_rank(&b.camera_id)))
            .then_with(|| a.camera_id.cmp(&b.camera_id))
            .then_with(|| a.frame_id.cmp(&b.frame_id))
            .then_with(|| a.detection_index.cmp(&b.detection_index))
    }
}

/// Index of the preferred member. Panics on an empty slice.
pub fn select_best(members: &[MeasurementRecord], policy: &SelectionPolicy) -> usize {
    assert!(!members.is_empty(), "select_best on empty cluster");
    (0..members.len())
        .min_by(|&i, &j| policy.prefer(&members[i], &members[j]))
        .unwrap()
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Groups detections whose centers lie within the match radius of each other
/// into connected components.
///
/// Clusters are ordered by their first member's input position and members
/// keep input order; the center and radius are member means.
pub fn deduplicate(
    items: Vec<LocalizedDetection>,
    threshold: MatchThreshold,
    policy: &SelectionPolicy,
) -> Vec<WorldFruit> {
    let n = items.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let bound = threshold.bound(items[i].radius_m, items[j].radius_m);
            if (items[i].center_world - items[j].center_world).norm() <= bound {
                uf.union(i, j);
            }
        }
    }

    let mut slot_of_root: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<Vec<LocalizedDetection>> = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        let root = uf.find(i);
        let slot = *slot_of_root[root].get_or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(item);
    }

    groups
        .into_iter()
        .map(|members| {
            let m = members.len() as f64;
            let center = members.iter().fold(nalgebra::Vector3::zeros(), |acc, d| acc + d.center_world.coords) / m;
            let radius = members.iter().map(|d| d.radius_m).sum::<f64>() / m;
            let records: Vec<MeasurementRecord> = members.iter().map(|d| d.record.clone()).collect();
            let chosen = select_best(&records, policy);
            WorldFruit { center_world: Point3::from(center), radius_m: radius, members, chosen }
        })
        .collect()
}
