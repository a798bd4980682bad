//! Geometric value types shared by every stage, and the transform that maps
//! an input cloud into the normalized `[-0.5, 0.5]³` frame.
//!
//! All absolute lengths used elsewhere in the crate (base patch radius, F1
//! thresholds, lattice margin) are expressed in that normalized frame.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    pub fn distance_squared(self, o: Point3) -> f64 {
        (self - o).norm_squared()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn min(self, o: Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs_component(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Point3 {
    type Output = f64;

    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Mean of a non-empty slice of points.
pub fn centroid(points: &[Point3]) -> Point3 {
    let mut sum = Point3::ORIGIN;
    for &p in points {
        sum += p;
    }
    sum / points.len() as f64
}

/// An ordered set of samples with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self {
            points,
            normals: None,
        }
    }

    /// Builds a cloud with normals. Panics if the lengths differ.
    pub fn with_normals(points: Vec<Point3>, normals: Vec<Point3>) -> Self {
        assert_eq!(points.len(), normals.len(), "one normal per point");
        Self {
            points,
            normals: Some(normals),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounds as `(min, max)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        Some(
            self.points
                .iter()
                .fold((first, first), |(lo, hi), &p| (lo.min(p), hi.max(p))),
        )
    }
}

/// Maps input coordinates to normalized ones via `p' = (p + translation) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub translation: Point3,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform {
        scale: 1.0,
        translation: Point3::ORIGIN,
    };

    pub fn apply(&self, p: Point3) -> Point3 {
        (p + self.translation) * self.scale
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        p / self.scale - self.translation
    }

    /// Converts a length in normalized units into input units.
    pub fn length_to_input(&self, len: f64) -> f64 {
        len / self.scale
    }
}

/// Centers the bounding box at the origin and scales its longest side to 1.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<(PointCloud, NormalizationTransform)> {
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyCloud)?;
    let extent = hi - lo;
    let longest = extent.max_abs_component();
    if !(longest > 0.0) || !longest.is_finite() {
        return Err(Error::DegenerateExtent);
    }
    let center = (lo + hi) * 0.5;
    let transform = NormalizationTransform {
        scale: 1.0 / longest,
        translation: -center,
    };
    let points = cloud.points.iter().map(|&p| transform.apply(p)).collect();
    Ok((
        PointCloud {
            points,
            normals: cloud.normals.clone(),
        },
        transform,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Self {
        Self { vertices, faces }
    }

    /// Checks that every index is in range and no face repeats one vertex three times.
    pub fn validate(&self) -> bool {
        let n = self.vertices.len();
        self.faces
            .iter()
            .all(|f| f.iter().all(|&i| i < n) && !(f[0] == f[1] && f[1] == f[2]))
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal (length = twice the triangle area).
    pub fn face_cross(&self, face: usize) -> Point3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_normal(&self, face: usize) -> Option<Point3> {
        self.face_cross(face).normalized()
    }
}

/// Maps mesh vertices back into the input frame; faces are untouched.
pub fn denormalize_mesh(mesh: &TriangleMesh, t: &NormalizationTransform) -> TriangleMesh {
    TriangleMesh {
        vertices: mesh.vertices.iter().map(|&p| t.invert(p)).collect(),
        faces: mesh.faces.clone(),
    }
}
