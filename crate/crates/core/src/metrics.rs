//! Point-set evaluation metrics: Chamfer distance, F1 at a distance
//! threshold, and normal consistency, plus area-weighted mesh sampling.
//!
//! Chamfer distance is the symmetric sum of mean nearest-neighbor L2
//! distances, reported ×10³. F1 counts matches with distance ≤ τ.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{PointCloud, Point3, TriangleMesh};
use crate::spatial::SpatialIndex;

pub const DEFAULT_SAMPLE_COUNT: usize = 100_000;
pub const F1_TIGHT: f64 = 0.005;
pub const F1_LOOSE: f64 = 0.01;
pub const CD_SCALE: f64 = 1e3;

/// `n` area-proportional samples over the mesh, each carrying its face normal.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    let mut faces = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        let area = mesh.face_area(f);
        if area > 0.0 && area.is_finite() {
            total += area;
            faces.push(f);
            cumulative.push(total);
        }
    }
    if faces.is_empty() {
        return Err(Error::NoArea);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let slot = cumulative.partition_point(|&c| c <= r).min(faces.len() - 1);
        let f = faces[slot];
        let [a, b, c] = mesh.triangle(f);
        let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        points.push(a + (b - a) * u + (c - a) * v);
        normals.push(mesh.face_normal(f).expect("positive area"));
    }
    Ok(PointCloud::with_normals(points, normals))
}

/// Nearest-neighbor distances from each point of `from` to `to`, in order.
fn nn_distances(from: &[Point3], to: &SpatialIndex) -> Vec<f64> {
    from.par_iter().map(|&p| to.nearest_distance(p)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    Ok(chamfer_indexed(a, &ia, b, &ib))
}

fn chamfer_indexed(a: &PointCloud, ia: &SpatialIndex, b: &PointCloud, ib: &SpatialIndex) -> f64 {
    CD_SCALE * (mean(&nn_distances(&a.points, ib)) + mean(&nn_distances(&b.points, ia)))
}

fn f1_from_distances(ab: &[f64], ba: &[f64], tau: f64) -> f64 {
    let precision = ab.iter().filter(|&&d| d <= tau).count() as f64 / ab.len() as f64;
    let recall = ba.iter().filter(|&&d| d <= tau).count() as f64 / ba.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// F1 of reconstruction samples `a` against ground truth `b` at threshold `tau`.
pub fn f1_score(a: &PointCloud, b: &PointCloud, tau: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("F1 threshold must be positive, got {tau}")));
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    Ok(f1_from_distances(
        &nn_distances(&a.points, &ib),
        &nn_distances(&b.points, &ia),
        tau,
    ))
}

fn directional_nc(from: &PointCloud, to: &PointCloud, to_index: &SpatialIndex) -> f64 {
    let fn_ = from.normals.as_ref().expect("checked");
    let tn = to.normals.as_ref().expect("checked");
    let dots: Vec<f64> = from
        .points
        .par_iter()
        .zip(fn_.par_iter())
        .map(|(&p, &n)| n.dot(tn[to_index.nearest(p).0]).abs())
        .collect();
    mean(&dots)
}

pub fn normal_consistency(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.normals.is_none() || b.normals.is_none() {
        return Err(Error::MissingNormals);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    Ok(0.5 * (directional_nc(a, b, &ib) + directional_nc(b, a, &ia)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub cd_x1000: f64,
    pub f1_0005: f64,
    pub f1_001: f64,
    /// Absent when the ground truth carries no normals.
    pub nc: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl MetricReport {
    pub fn to_record(&self) -> String {
        let nc = self.nc.map_or("na".to_string(), |v| format!("{v}"));
        format!(
            "cd_x1000={} f1_0005={} f1_001={} nc={} samples={} seed={}",
            self.cd_x1000, self.f1_0005, self.f1_001, nc, self.samples, self.seed
        )
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cd_variant=mean_l2_symmetric_sum_x1000")?;
        for kv in self.to_record().split(' ') {
            writeln!(f, "{kv}")?;
        }
        Ok(())
    }
}

/// Samples `mesh` and compares it with `ground_truth`.
///
/// `unit` is the length of one normalized unit in the clouds' frame: Chamfer
/// distance is reported in normalized units and the F1 thresholds are scaled
/// by it.
pub fn evaluate(
    mesh: &TriangleMesh,
    ground_truth: &PointCloud,
    samples: usize,
    seed: u64,
    unit: f64,
) -> Result<MetricReport> {
    if ground_truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rec = sample_mesh(mesh, samples, seed)?;
    let ir = SpatialIndex::build(&rec)?;
    let ig = SpatialIndex::build(ground_truth)?;
    let rg = nn_distances(&rec.points, &ig);
    let gr = nn_distances(&ground_truth.points, &ir);
    let cd_x1000 = CD_SCALE * (mean(&rg) + mean(&gr)) / unit;
    let nc = ground_truth
        .normals
        .as_ref()
        .map(|_| 0.5 * (directional_nc(&rec, ground_truth, &ig) + directional_nc(ground_truth, &rec, &ir)));
    Ok(MetricReport {
        cd_x1000,
        f1_0005: f1_from_distances(&rg, &gr, F1_TIGHT * unit),
        f1_001: f1_from_distances(&rg, &gr, F1_LOOSE * unit),
        nc,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|&p| Point3::from(p)).collect())
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, normals: bool) -> PointCloud {
        let pts: Vec<_> = (0..n)
            .map(|_| Point3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
            .collect();
        if normals {
            let ns = (0..n)
                .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalized().unwrap())
                .collect();
            PointCloud::with_normals(pts, ns)
        } else {
            PointCloud::new(pts)
        }
    }

    fn brute_nn(p: Point3, set: &[Point3]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, q) in set.iter().enumerate() {
            let d = p.distance(*q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    fn brute_cd(a: &PointCloud, b: &PointCloud) -> f64 {
        let ab: f64 = a.points.iter().map(|&p| brute_nn(p, &b.points).1).sum::<f64>() / a.len() as f64;
        let ba: f64 = b.points.iter().map(|&p| brute_nn(p, &a.points).1).sum::<f64>() / b.len() as f64;
        1e3 * (ab + ba)
    }

    #[test]
    fn chamfer_examples() {
        let a = cloud(&[[0.0, 0.0, 0.0]]);
        let b = cloud(&[[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer(&a, &b).unwrap(), 2000.0);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        assert!(matches!(chamfer(&a, &PointCloud::default()), Err(Error::EmptyInput)));
    }

    #[test]
    fn f1_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cloud(&mut rng, 50, false);
        assert_eq!(f1_score(&a, &a, 1e-6).unwrap(), 1.0);
        let far = PointCloud::new(a.points.iter().map(|&p| p + Point3::new(5.0, 0.0, 0.0)).collect());
        assert_eq!(f1_score(&a, &far, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn nc_examples() {
        let pts: Vec<_> = (0..25).map(|i| Point3::new((i % 5) as f64, (i / 5) as f64, 0.0)).collect();
        let up = PointCloud::with_normals(pts.clone(), vec![Point3::new(0.0, 0.0, 1.0); 25]);
        let down = PointCloud::with_normals(pts.clone(), vec![Point3::new(0.0, 0.0, -1.0); 25]);
        let side = PointCloud::with_normals(pts.clone(), vec![Point3::new(1.0, 0.0, 0.0); 25]);
        assert_eq!(normal_consistency(&up, &up).unwrap(), 1.0);
        assert_eq!(normal_consistency(&up, &down).unwrap(), 1.0);
        assert_eq!(normal_consistency(&up, &side).unwrap(), 0.0);
        assert!(matches!(
            normal_consistency(&up, &PointCloud::new(pts)),
            Err(Error::MissingNormals)
        ));
    }

    #[test]
    fn sampling_single_triangle() {
        let mesh = TriangleMesh::new(
            vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let s = sample_mesh(&mesh, 2000, 3).unwrap();
        for (p, n) in s.points.iter().zip(s.normals.as_ref().unwrap()) {
            assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 + 1e-15 && p.z == 0.0);
            assert_eq!(*n, Point3::new(0.0, 0.0, 1.0));
        }
        assert_eq!(s, sample_mesh(&mesh, 2000, 3).unwrap());
        let flat = TriangleMesh::new(vec![Point3::ORIGIN; 3], vec![[0, 1, 2]]);
        assert!(matches!(sample_mesh(&flat, 10, 0), Err(Error::NoArea)));
    }

    #[test]
    fn sampling_is_area_proportional() {
        // areas 1 and 3: expect a 25/75 split within 3 sigma of the binomial
        let v = vec![
            Point3::ORIGIN,
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(10.0, 0.0, 0.0),
            Point3::new(16.0, 0.0, 0.0),
            Point3::new(10.0, 1.0, 0.0),
        ];
        let mesh = TriangleMesh::new(v, vec![[0, 1, 2], [3, 4, 5]]);
        assert_eq!(mesh.face_area(0), 1.0);
        assert_eq!(mesh.face_area(1), 3.0);
        let n = 10_000;
        let s = sample_mesh(&mesh, n, 17).unwrap();
        let first = s.points.iter().filter(|p| p.x < 5.0).count() as f64 / n as f64;
        let sd = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((first - 0.25).abs() < 3.0 * sd, "{first}");
    }

    #[test]
    fn oracle_equivalence_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let na = rng.random_range(1..300);
            let nb = rng.random_range(1..300);
            let a = random_cloud(&mut rng, na, true);
            let b = random_cloud(&mut rng, nb, true);
            let cd = chamfer(&a, &b).unwrap();
            let want = brute_cd(&a, &b);
            assert!((cd - want).abs() <= 1e-9 * want.abs().max(1e-300));
            assert_eq!(cd, chamfer(&b, &a).unwrap());
            for tau in [0.005, 0.01, 0.03] {
                let f = f1_score(&a, &b, tau).unwrap();
                assert_eq!(f, f1_score(&b, &a, tau).unwrap());
            }
            assert_eq!(normal_consistency(&a, &b).unwrap(), normal_consistency(&b, &a).unwrap());
        }
    }

    #[test]
    fn report_format() {
        let r = MetricReport { cd_x1000: 0.5, f1_0005: 0.25, f1_001: 0.75, nc: None, samples: 10, seed: 3 };
        assert_eq!(r.to_record(), "cd_x1000=0.5 f1_0005=0.25 f1_001=0.75 nc=na samples=10 seed=3");
        assert!(r.to_string().contains("seed=3\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn f1_monotone_in_tau(seed in any::<u64>(), t1 in 0.001f64..0.1, t2 in 0.001f64..0.1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_cloud(&mut rng, 80, false);
            let b = random_cloud(&mut rng, 60, false);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(f1_score(&a, &b, lo).unwrap() <= f1_score(&a, &b, hi).unwrap());
            prop_assert_eq!(f1_score(&a, &a, lo).unwrap(), 1.0);
        }
    }
}
