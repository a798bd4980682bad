//! Surface-variation curvature `λ0 / (λ0 + λ1 + λ2)` of local point regions,
//! and the percentile summary of those values over all coarse queries.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{PointCloud, Point3};
use crate::spatial::SpatialIndex;

/// Row-major symmetric 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Regions whose covariance trace falls below this are treated as flat.
pub const DEGENERATE_TRACE: f64 = 1e-15;

/// Largest value surface variation can take (isotropic spread).
pub const MAX_SIGMA: f64 = 1.0 / 3.0;

/// Population covariance `(1/m) Σ (p − mean)(p − mean)ᵀ`.
pub fn covariance3(points: &[Point3]) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    if points.is_empty() {
        return m;
    }
    let mean = crate::model::centroid(points);
    for &p in points {
        let d = (p - mean).to_array();
        for i in 0..3 {
            for j in i..3 {
                m[i][j] += d[i] * d[j];
            }
        }
    }
    let inv = 1.0 / points.len() as f64;
    for i in 0..3 {
        for j in i..3 {
            m[i][j] *= inv;
            m[j][i] = m[i][j];
        }
    }
    m
}

/// Ascending eigenvalues with matching orthonormal eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen3 {
    pub values: [f64; 3],
    pub vectors: [Point3; 3],
}

impl SymmetricEigen3 {
    /// Rebuilds `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for k in 0..3 {
            let v = self.vectors[k].to_array();
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += self.values[k] * v[i] * v[j];
                }
            }
        }
        m
    }
}

pub fn frobenius(m: &Mat3) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric 3×3 matrix.
pub fn eigen_sym3(m: &Mat3) -> Result<SymmetricEigen3> {
    let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let asym = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| (m[i][j] - m[j][i]).abs())
        .fold(0.0, f64::max);
    if asym > 1e-12 * scale || m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = *m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off == 0.0 || off <= 1e-36 * diag {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (akp, akq) = (row[p], row[q]);
                row[p] = c * akp - s * akq;
                row[q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vkp, vkq) = (row[p], row[q]);
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let column = |k: usize| Point3::new(v[0][k], v[1][k], v[2][k]);
    Ok(SymmetricEigen3 {
        values: order.map(|k| a[k][k]),
        vectors: order.map(column),
    })
}

/// `λ0 / (λ0 + λ1 + λ2)` from clamped eigenvalues; 0 when the spectrum is degenerate.
pub fn sigma_from_eigenvalues(values: [f64; 3]) -> f64 {
    let l = values.map(|x| x.max(0.0));
    let trace = l[0] + l[1] + l[2];
    if trace < DEGENERATE_TRACE {
        return 0.0;
    }
    (l[0] / trace).clamp(0.0, MAX_SIGMA)
}

/// Surface variation of a point region. Fewer than 3 points count as flat.
pub fn surface_variation(points: &[Point3]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let cov = covariance3(points);
    // covariance3 is symmetric by construction
    let eig = eigen_sym3(&cov).expect("covariance is symmetric");
    sigma_from_eigenvalues(eig.values)
}

/// Linear-interpolation percentile on the sorted values.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&v, p))
}

pub(crate) fn percentile_sorted(v: &[f64], p: f64) -> f64 {
    let m = v.len();
    let h = (m - 1) as f64 * p.clamp(0.0, 100.0) / 100.0;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        return v[m - 1];
    }
    v[lo] + (h - lo as f64) * (v[lo + 1] - v[lo])
}

/// The four curvature breakpoints that parameterize the radius schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percentiles {
    pub p10: f64,
    pub p40: f64,
    pub p60: f64,
    pub p90: f64,
}

impl Percentiles {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            p10: percentile_sorted(&v, 10.0),
            p40: percentile_sorted(&v, 40.0),
            p60: percentile_sorted(&v, 60.0),
            p90: percentile_sorted(&v, 90.0),
        })
    }
}

/// Per-query surface variation; `None` where the region held fewer than 3 points.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub sigma: Vec<Option<f64>>,
    pub percentiles: Percentiles,
}

impl CurvatureField {
    pub fn present(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.sigma
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (i, s)))
    }
}

/// Surface variation of the radius-`r0` region around each query.
pub fn curvature_field(
    cloud: &PointCloud,
    index: &SpatialIndex,
    queries: &[Point3],
    r0: f64,
) -> Result<CurvatureField> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidConfig(format!("r0 must be positive, got {r0}")));
    }
    let sigma: Vec<Option<f64>> = queries
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(ids, pts), &q| {
                index.radius_query_into(q, r0, ids);
                if ids.len() < 3 {
                    return None;
                }
                pts.clear();
                pts.extend(ids.iter().map(|&i| cloud.points[i]));
                Some(surface_variation(pts))
            },
        )
        .collect();
    let present: Vec<f64> = sigma.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::NoCurvatureSamples);
    }
    let percentiles = Percentiles::from_values(&present)?;
    Ok(CurvatureField { sigma, percentiles })
}
