//! Local patches: the points within a curvature-modulated radius of a query,
//! brought to a fixed sample count.
//!
//! Under-full patches are padded by curvature: smooth regions get copies of
//! the patch centroid, curved regions get round-robin duplicates of their own
//! samples so the distribution is not pulled towards the centroid. Over-full
//! patches are subsampled uniformly with a per-query seed.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{centroid, PointCloud, Point3};
use crate::spatial::SpatialIndex;

pub const DEFAULT_TARGET_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePolicy {
    pub target_count: usize,
    /// σ at or above which under-full patches are padded by duplication.
    pub curvature_threshold: f64,
    pub rng_seed: u64,
}

impl ResamplePolicy {
    /// The same policy with its seed mixed with a query id, so every query
    /// draws from its own stream regardless of evaluation order.
    pub fn for_query(&self, query_id: u64) -> Self {
        Self {
            rng_seed: self.rng_seed ^ query_id,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub query: Point3,
    pub radius_used: f64,
    pub points: Vec<Point3>,
    pub source_count: usize,
    pub sigma: f64,
}

impl Patch {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Points within the closed ball of radius `r` around `q`, in source order.
pub fn extract_patch(index: &SpatialIndex, cloud: &PointCloud, q: Point3, r: f64) -> Vec<Point3> {
    let mut ids = Vec::new();
    let mut out = Vec::new();
    extract_into(index, cloud, q, r, &mut ids, &mut out);
    out
}

pub(crate) fn extract_into(
    index: &SpatialIndex,
    cloud: &PointCloud,
    q: Point3,
    r: f64,
    ids: &mut Vec<usize>,
    out: &mut Vec<Point3>,
) {
    index.radius_query_into(q, r, ids);
    out.clear();
    out.extend(ids.iter().map(|&i| cloud.points[i]));
}

/// Brings `points` to exactly `policy.target_count` samples (or leaves it empty).
pub fn resample(mut points: Vec<Point3>, sigma: f64, policy: &ResamplePolicy) -> Vec<Point3> {
    let n = points.len();
    let target = policy.target_count;
    if n == 0 || n == target {
        return points;
    }
    if n > target {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.rng_seed);
        let mut keep = sample(&mut rng, n, target).into_vec();
        keep.sort_unstable();
        return keep.into_iter().map(|i| points[i]).collect();
    }
    points.reserve(target - n);
    if sigma < policy.curvature_threshold {
        let c = centroid(&points);
        points.resize(target, c);
    } else {
        for k in 0..target - n {
            points.push(points[k % n]);
        }
    }
    points
}

/// Extraction followed by resampling; the patch's seed is derived from `query_id`.
pub fn build_patch(
    index: &SpatialIndex,
    cloud: &PointCloud,
    query: Point3,
    radius: f64,
    sigma: f64,
    policy: &ResamplePolicy,
    query_id: u64,
) -> Patch {
    let raw = extract_patch(index, cloud, query, radius);
    let source_count = raw.len();
    Patch {
        query,
        radius_used: radius,
        points: resample(raw, sigma, &policy.for_query(query_id)),
        source_count,
        sigma,
    }
}
