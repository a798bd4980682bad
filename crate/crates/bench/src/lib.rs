//! Shared inputs for the stage benchmarks in `benches/`.

use adaptive_udf::grid::LatticeSpec;
use adaptive_udf::{fixture, PointCloud};

pub fn sphere_cloud(count: usize) -> PointCloud {
    fixture::sphere(count, fixture::SPHERE_RADIUS, 0.0, 1)
}

/// Unsigned distance to the fixture sphere at every fine vertex.
pub fn sphere_udf(spec: &LatticeSpec) -> Vec<f64> {
    (0..spec.total_fine_vertices())
        .map(|id| (spec.position(id).norm() - fixture::SPHERE_RADIUS).abs())
        .collect()
}
