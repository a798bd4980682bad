//! Offset level-set extraction.
//!
//! An unsigned field has no sign change at the surface, so the mesh is taken
//! at `UDF = ε`: a thin two-sided shell around the zero set. Each crossed
//! lattice edge owns exactly one vertex, so adjacent cubes share vertices and
//! output order depends only on the field.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::LatticeSpec;
use crate::mc_tables::{CORNERS, EDGES, EDGE_TABLE, TRI_TABLE};
use crate::model::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoSpec {
    pub epsilon: f64,
}

impl IsoSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(Self { epsilon })
        } else {
            Err(Error::InvalidConfig(format!("iso offset must be positive, got {epsilon}")))
        }
    }

    /// Half of one fine cell edge.
    pub fn for_lattice(spec: &LatticeSpec) -> Self {
        Self {
            epsilon: 0.5 * spec.fine_cell_edge(),
        }
    }
}

pub fn marching_cubes(field: &[f64], spec: &LatticeSpec, iso: IsoSpec) -> Result<TriangleMesh> {
    let n = spec.n();
    if n < 2 || field.len() != n * n * n || field.iter().any(|v| v.is_nan()) {
        return Err(Error::EmptyField);
    }
    let eps = iso.epsilon;
    let below = |id: usize| field[id] < eps;
    let stride = [n * n, n, 1];

    // crossed lattice edges, keyed id * 3 + axis, ascending
    let keys: Vec<usize> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    let idx = [i, j, k];
                    let id = spec.id(idx);
                    for axis in 0..3 {
                        if idx[axis] + 1 < n && below(id) != below(id + stride[axis]) {
                            out.push(id * 3 + axis);
                        }
                    }
                }
            }
            out
        })
        .collect();

    let vertices = keys
        .par_iter()
        .map(|&key| {
            let (id, axis) = (key / 3, key % 3);
            let (v0, v1) = (field[id], field[id + stride[axis]]);
            let t = (eps - v0) / (v1 - v0);
            let p0 = spec.position(id);
            let p1 = spec.position(id + stride[axis]);
            p0 + (p1 - p0) * t
        })
        .collect();

    let lookup = |key: usize| keys.binary_search(&key).expect("crossed edge has a vertex");

    let faces: Vec<[usize; 3]> = (0..n - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..n - 1 {
                for k in 0..n - 1 {
                    let corner_ids = CORNERS.map(|[dx, dy, dz]| spec.id([i + dx, j + dy, k + dz]));
                    let mut case = 0usize;
                    for (c, &id) in corner_ids.iter().enumerate() {
                        if below(id) {
                            case |= 1 << c;
                        }
                    }
                    if EDGE_TABLE[case] == 0 {
                        continue;
                    }
                    let edge_vertex = |e: usize| {
                        let [a, b] = EDGES[e];
                        let (lo, hi) = if corner_ids[a] < corner_ids[b] {
                            (corner_ids[a], corner_ids[b])
                        } else {
                            (corner_ids[b], corner_ids[a])
                        };
                        let axis = stride.iter().position(|&s| s == hi - lo).expect("unit edge");
                        lookup(lo * 3 + axis)
                    };
                    for tri in TRI_TABLE[case].chunks_exact(3) {
                        if tri[0] < 0 {
                            break;
                        }
                        out.push([
                            edge_vertex(tri[0] as usize),
                            edge_vertex(tri[1] as usize),
                            edge_vertex(tri[2] as usize),
                        ]);
                    }
                }
            }
            out
        })
        .collect();

    Ok(TriangleMesh::new(vertices, faces))
}
