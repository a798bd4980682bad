//! Analytic test clouds, all already in the normalized frame (longest
//! bounding-box side 1, centered at the origin), with exact normals.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Point3, PointCloud};

pub const SPHERE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureKind {
    Sphere,
    Cube,
    /// Two parallel sheets `gap` apart.
    Sheets { gap: f64 },
    Plane,
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "cube" => Ok(Self::Cube),
            "sheets" => Ok(Self::Sheets { gap: 0.045 }),
            "plane" => Ok(Self::Plane),
            other => Err(Error::InvalidConfig(format!(
                "unknown fixture '{other}' (expected sphere, cube, sheets or plane)"
            ))),
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sphere => f.write_str("sphere"),
            Self::Cube => f.write_str("cube"),
            Self::Sheets { .. } => f.write_str("sheets"),
            Self::Plane => f.write_str("plane"),
        }
    }
}

/// Generates `count` points; `jitter` is a uniform offset amplitude along
/// the surface normal.
pub fn generate(kind: FixtureKind, count: usize, jitter: f64, seed: u64) -> PointCloud {
    match kind {
        FixtureKind::Sphere => sphere(count, SPHERE_RADIUS, jitter, seed),
        FixtureKind::Cube => cube(count, jitter, seed),
        FixtureKind::Sheets { gap } => sheets(count, gap, jitter, seed),
        FixtureKind::Plane => plane(count, jitter, seed),
    }
}

fn offset(rng: &mut ChaCha8Rng, jitter: f64) -> f64 {
    if jitter > 0.0 {
        rng.random_range(-jitter..=jitter)
    } else {
        0.0
    }
}

/// Uniform samples of a sphere centered at the origin.
pub fn sphere(count: usize, radius: f64, jitter: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let n = Point3::new(s * phi.cos(), s * phi.sin(), z);
        points.push(n * (radius + offset(&mut rng, jitter)));
        normals.push(n);
    }
    PointCloud::with_normals(points, normals)
}

/// Area-uniform samples of the unit cube surface centered at the origin.
pub fn cube(count: usize, jitter: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let face = rng.random_range(0..6usize);
        let axis = face / 2;
        let sign = if face % 2 == 0 { -1.0 } else { 1.0 };
        let mut p = [0.0; 3];
        for (a, c) in p.iter_mut().enumerate() {
            *c = if a == axis {
                sign * 0.5
            } else {
                rng.random_range(-0.5..=0.5)
            };
        }
        let mut n = [0.0; 3];
        n[axis] = sign;
        p[axis] += sign * offset(&mut rng, jitter);
        points.push(Point3::from(p));
        normals.push(Point3::from(n));
    }
    PointCloud::with_normals(points, normals)
}

/// Points of the square `[-0.5, 0.5]²` at height `z`; the four corners come
/// first so the bounding box is exact.
fn square(rng: &mut ChaCha8Rng, count: usize, z: f64, jitter: f64, out: &mut Vec<Point3>) {
    for k in 0..count {
        let (x, y) = if k < 4 {
            (if k & 1 == 0 { -0.5 } else { 0.5 }, if k & 2 == 0 { -0.5 } else { 0.5 })
        } else {
            (rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5))
        };
        out.push(Point3::new(x, y, z + offset(rng, jitter)));
    }
}

/// Two parallel unit squares at `z = ±gap/2`, `count` points in total.
pub fn sheets(count: usize, gap: f64, jitter: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    square(&mut rng, count / 2, -0.5 * gap, jitter, &mut points);
    square(&mut rng, count - count / 2, 0.5 * gap, jitter, &mut points);
    let normals = vec![Point3::new(0.0, 0.0, 1.0); points.len()];
    PointCloud::with_normals(points, normals)
}

/// A unit square in the plane `z = 0`.
pub fn plane(count: usize, jitter: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    square(&mut rng, count, 0.0, jitter, &mut points);
    let normals = vec![Point3::new(0.0, 0.0, 1.0); points.len()];
    PointCloud::with_normals(points, normals)
}
