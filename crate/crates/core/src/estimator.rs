//! Per-patch unsigned distance estimators.
//!
//! An estimator sees exactly one query and its fixed-size patch, so a learned
//! model taking the same inputs can be dropped in behind [`UdfEstimator`].

use std::fmt;
use std::str::FromStr;

use crate::curvature::{covariance3, eigen_sym3, DEGENERATE_TRACE};
use crate::error::{Error, Result};
use crate::model::{centroid, Point3};
use crate::patch::Patch;
use crate::spatial::SpatialIndex;

pub const DEFAULT_FAR_CAP: f64 = 0.10;

pub trait UdfEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Unsigned distance at `query`; `EmptyPatch` when the patch has no points.
    fn estimate(&self, query: Point3, patch: &Patch) -> Result<f64>;
}

/// Distance to the closest patch sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestPoint;

/// Distance to the least-squares plane of the patch, never above the
/// nearest-sample distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlaneFit;

impl UdfEstimator for NearestPoint {
    fn name(&self) -> &'static str {
        "nearest"
    }

    fn estimate(&self, query: Point3, patch: &Patch) -> Result<f64> {
        estimate_nearest_point(query, &patch.points)
    }
}

impl UdfEstimator for PlaneFit {
    fn name(&self) -> &'static str {
        "plane"
    }

    fn estimate(&self, query: Point3, patch: &Patch) -> Result<f64> {
        estimate_plane_fit(query, &patch.points)
    }
}

pub fn estimate_nearest_point(q: Point3, points: &[Point3]) -> Result<f64> {
    points
        .iter()
        .map(|p| p.distance(q))
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptyPatch)
}

/// Unclamped distance from `q` to the patch plane; `DegeneratePatch` when no
/// plane is defined (fewer than 3 points, or collinear/coincident samples).
pub fn plane_distance(q: Point3, points: &[Point3]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPatch);
    }
    if points.len() < 3 {
        return Err(Error::DegeneratePatch);
    }
    let eig = eigen_sym3(&covariance3(points))?;
    let [l0, l1, l2] = eig.values.map(|v| v.max(0.0));
    if l0 + l1 + l2 < DEGENERATE_TRACE || l1 <= 1e-12 * l2 {
        return Err(Error::DegeneratePatch);
    }
    let c = centroid(points);
    Ok((q - c).dot(eig.vectors[0]).abs())
}

pub fn estimate_plane_fit(q: Point3, points: &[Point3]) -> Result<f64> {
    let nearest = estimate_nearest_point(q, points)?;
    match plane_distance(q, points) {
        Ok(d) => Ok(d.min(nearest)),
        Err(Error::DegeneratePatch) => Ok(nearest),
        Err(e) => Err(e),
    }
}

/// Value for queries whose patch is empty: global nearest distance, capped.
pub fn estimate_far(q: Point3, global: &SpatialIndex, far_cap: f64) -> f64 {
    global.nearest_distance(q).min(far_cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorKind {
    Nearest,
    #[default]
    Plane,
}

impl EstimatorKind {
    pub fn estimator(self) -> &'static dyn UdfEstimator {
        match self {
            EstimatorKind::Nearest => &NearestPoint,
            EstimatorKind::Plane => &PlaneFit,
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(EstimatorKind::Nearest),
            "plane" => Ok(EstimatorKind::Plane),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator '{other}' (expected nearest or plane)"
            ))),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.estimator().name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice_plane(n: usize, h: f64) -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(Point3::new(i as f64 * h - 0.5 * h * (n - 1) as f64, j as f64 * h - 0.5 * h * (n - 1) as f64, 0.0));
            }
        }
        v
    }

    #[test]
    fn nearest_point_examples() {
        let pts = [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0)];
        assert_eq!(estimate_nearest_point(Point3::ORIGIN, &pts).unwrap(), 1.0);
        assert_eq!(estimate_nearest_point(pts[1], &pts).unwrap(), 0.0);
        assert!(matches!(estimate_nearest_point(Point3::ORIGIN, &[]), Err(Error::EmptyPatch)));
    }

    #[test]
    fn nearest_point_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let pts: Vec<_> = (0..64)
                .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let q = Point3::new(rng.random(), rng.random(), rng.random());
            let mut best = f64::INFINITY;
            for p in &pts {
                best = best.min(((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt());
            }
            assert!((estimate_nearest_point(q, &pts).unwrap() - best).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_fit_on_planar_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<_> = (0..64)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let d = estimate_plane_fit(Point3::new(0.1, 0.2, 0.5), &pts).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!(estimate_plane_fit(Point3::new(0.3, -0.1, 0.0), &pts).unwrap() < 1e-12);
    }

    #[test]
    fn plane_fit_agrees_with_truth_inside_hull() {
        // lattice plane: the foot point of every probe below is a sample
        let pts = lattice_plane(9, 0.01);
        for (x, y, z) in [(0.0, 0.0, 0.007), (0.01, -0.02, 0.03), (0.03, 0.03, -0.004)] {
            let q = Point3::new(x, y, z);
            let plane = estimate_plane_fit(q, &pts).unwrap();
            let near = estimate_nearest_point(q, &pts).unwrap();
            assert!((plane - z.abs()).abs() < 1e-9);
            assert!((near - z.abs()).abs() < 1e-9);
            assert!(near >= z.abs() - 1e-12);
        }
    }

    #[test]
    fn plane_fit_on_sphere_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = 0.3;
        let cap: Vec<_> = (0..64)
            .map(|_| {
                let theta: f64 = rng.random_range(0.0..0.15);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Point3::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos())
            })
            .collect();
        // cap sagitta by brute force over the samples' heights
        let sagitta = cap.iter().map(|p| r - p.z).fold(0.0, f64::max);
        for _ in 0..20 {
            let theta: f64 = rng.random_range(0.0..0.1);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let q = Point3::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
            let d = estimate_plane_fit(q, &cap).unwrap();
            assert!(d <= estimate_nearest_point(q, &cap).unwrap());
            assert!(d <= sagitta + 1e-12);
        }
    }

    #[test]
    fn degenerate_patches_fall_back() {
        let line: Vec<_> = (0..10).map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let q = Point3::new(0.05, 0.3, 0.0);
        assert!(matches!(plane_distance(q, &line), Err(Error::DegeneratePatch)));
        assert_eq!(
            estimate_plane_fit(q, &line).unwrap(),
            estimate_nearest_point(q, &line).unwrap()
        );
        let same = [Point3::new(1.0, 1.0, 1.0); 64];
        assert!((estimate_plane_fit(Point3::ORIGIN, &same).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn far_estimate_is_capped() {
        let idx = SpatialIndex::from_points(&[Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(estimate_far(Point3::ORIGIN, &idx, 0.1), 0.0);
        assert_eq!(estimate_far(Point3::new(10.0, 0.0, 0.0), &idx, 0.1), 0.1);
        assert_eq!(estimate_far(Point3::new(0.0, 0.05, 0.0), &idx, 0.1), 0.05);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("plane".parse::<EstimatorKind>().unwrap(), EstimatorKind::Plane);
        assert_eq!(EstimatorKind::Nearest.to_string(), "nearest");
        assert!("neural".parse::<EstimatorKind>().is_err());
    }
}
