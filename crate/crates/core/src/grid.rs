//! Two-resolution query lattice.
//!
//! Every vertex of the coarse lattice is evaluated. Around coarse vertices
//! whose curvature is high, the surrounding 3×3×3 block of fine vertices is
//! evaluated as well. The remaining fine vertices are filled by averaging in
//! three passes: edge midpoints from their two coarse endpoints, face centers
//! from their four edge midpoints, cell centers from their six face centers.
//!
//! Vertices are addressed by their fine index `(i, j, k)` or by the linear id
//! `(i * n + j) * n + k` with `n = fine_cells + 1` (z fastest). Coarse vertex
//! `(a, b, c)` is fine vertex `(2a, 2b, 2c)`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::curvature::CurvatureField;
use crate::error::{Error, Location, Result};
use crate::model::Point3;

pub const DEFAULT_COARSE_CELLS: usize = 128;
pub const DEFAULT_MARGIN_CELLS: usize = 3;

/// Cubic lattice over `[-0.5 − m, 0.5 + m]³`, where the margin `m` is a whole
/// number of coarse cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub coarse_cells: usize,
    pub margin_cells: usize,
}

impl LatticeSpec {
    pub fn new(coarse_cells: usize, margin_cells: usize) -> Result<Self> {
        if coarse_cells == 0 || coarse_cells <= 2 * margin_cells {
            return Err(Error::InvalidConfig(format!(
                "coarse_cells ({coarse_cells}) must exceed twice the margin ({margin_cells})"
            )));
        }
        Ok(Self {
            coarse_cells,
            margin_cells,
        })
    }

    pub fn fine_cells(&self) -> usize {
        2 * self.coarse_cells
    }

    /// Fine vertices per axis.
    pub fn n(&self) -> usize {
        self.fine_cells() + 1
    }

    pub fn total_fine_vertices(&self) -> usize {
        self.n().pow(3)
    }

    pub fn total_coarse_vertices(&self) -> usize {
        (self.coarse_cells + 1).pow(3)
    }

    pub fn coarse_cell_edge(&self) -> f64 {
        1.0 / (self.coarse_cells - 2 * self.margin_cells) as f64
    }

    pub fn fine_cell_edge(&self) -> f64 {
        0.5 * self.coarse_cell_edge()
    }

    pub fn margin(&self) -> f64 {
        self.margin_cells as f64 * self.coarse_cell_edge()
    }

    pub fn domain_min(&self) -> f64 {
        -0.5 - self.margin()
    }

    pub fn id(&self, [i, j, k]: [usize; 3]) -> usize {
        let n = self.n();
        (i * n + j) * n + k
    }

    pub fn index(&self, id: usize) -> [usize; 3] {
        let n = self.n();
        [id / (n * n), (id / n) % n, id % n]
    }

    pub fn position_of(&self, [i, j, k]: [usize; 3]) -> Point3 {
        let h = self.fine_cell_edge();
        let o = self.domain_min();
        Point3::new(o + i as f64 * h, o + j as f64 * h, o + k as f64 * h)
    }

    pub fn position(&self, id: usize) -> Point3 {
        self.position_of(self.index(id))
    }

    pub fn is_coarse(&self, id: usize) -> bool {
        self.index(id).iter().all(|c| c % 2 == 0)
    }
}

/// Every coarse vertex as `(fine id, position)`, lexicographic with z fastest.
pub fn coarse_queries(spec: &LatticeSpec) -> Vec<(usize, Point3)> {
    let m = spec.coarse_cells + 1;
    let mut out = Vec::with_capacity(m * m * m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let idx = [2 * a, 2 * b, 2 * c];
                out.push((spec.id(idx), spec.position_of(idx)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FineClass {
    Vertex,
    EdgeMid,
    FaceCenter,
    CellCenter,
}

/// Classification by how many index components are odd.
pub fn classify_fine(index: [usize; 3]) -> FineClass {
    match index.iter().filter(|c| *c % 2 == 1).count() {
        0 => FineClass::Vertex,
        1 => FineClass::EdgeMid,
        2 => FineClass::FaceCenter,
        _ => FineClass::CellCenter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    Unset,
    Coarse,
    Refined,
    Edge,
    Face,
    Cell,
}

impl Tag {
    pub fn is_evaluated(self) -> bool {
        matches!(self, Tag::Coarse | Tag::Refined)
    }

    pub fn is_filled(self) -> bool {
        matches!(self, Tag::Edge | Tag::Face | Tag::Cell)
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveGrid {
    spec: LatticeSpec,
    tags: Vec<Tag>,
    values: Vec<f64>,
}

impl AdaptiveGrid {
    /// A grid with every coarse vertex tagged for evaluation and no values yet.
    pub fn new(spec: LatticeSpec) -> Self {
        let total = spec.total_fine_vertices();
        let mut tags = vec![Tag::Unset; total];
        for (id, _) in coarse_queries(&spec) {
            tags[id] = Tag::Coarse;
        }
        Self {
            spec,
            tags,
            values: vec![f64::NAN; total],
        }
    }

    /// A grid where every fine vertex is evaluated (the uniform-fine baseline).
    pub fn uniform(spec: LatticeSpec) -> Self {
        let mut g = Self::new(spec);
        for t in g.tags.iter_mut() {
            if *t == Tag::Unset {
                *t = Tag::Refined;
            }
        }
        g
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn tag(&self, id: usize) -> Tag {
        self.tags[id]
    }

    pub fn value(&self, id: usize) -> Option<f64> {
        let v = self.values[id];
        (!v.is_nan()).then_some(v)
    }

    pub fn set_value(&mut self, id: usize, v: f64) {
        self.values[id] = v;
    }

    /// Ids tagged for evaluation, ascending.
    pub fn evaluated_ids(&self) -> Vec<usize> {
        (0..self.tags.len())
            .filter(|&i| self.tags[i].is_evaluated())
            .collect()
    }

    pub fn evaluated_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_evaluated()).count()
    }

    pub fn filled_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_filled()).count()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dense values, once every vertex has one.
    pub fn dense(&self) -> Result<&[f64]> {
        if self.values.iter().any(|v| v.is_nan()) {
            return Err(Error::EmptyField);
        }
        Ok(&self.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Adds the 3×3×3 fine block around each hot coarse vertex; returns the newly
/// tagged ids.
pub fn refine(grid: &mut AdaptiveGrid, hot_coarse: &[usize]) -> Result<Vec<usize>> {
    Ok(refine_with_parents(grid, hot_coarse)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

/// Like [`refine`], pairing each new id with the hot vertex that added it
/// (the lowest hot id whose block contains it).
pub fn refine_with_parents(
    grid: &mut AdaptiveGrid,
    hot_coarse: &[usize],
) -> Result<Vec<(usize, usize)>> {
    let spec = grid.spec;
    let mut hot = hot_coarse.to_vec();
    hot.sort_unstable();
    hot.dedup();
    for &h in &hot {
        if h >= grid.tags.len() || grid.tags[h] != Tag::Coarse {
            return Err(Error::NotCoarseVertex(h));
        }
    }
    let last = spec.fine_cells() as isize;
    let mut added = Vec::new();
    for &h in &hot {
        let [i, j, k] = spec.index(h).map(|c| c as isize);
        for a in -1..=1isize {
            for b in -1..=1isize {
                for c in -1..=1isize {
                    let idx = [i + a, j + b, k + c];
                    if idx.iter().any(|&x| x < 0 || x > last) {
                        continue;
                    }
                    let id = spec.id(idx.map(|x| x as usize));
                    if grid.tags[id] == Tag::Unset {
                        grid.tags[id] = Tag::Refined;
                        added.push((id, h));
                    }
                }
            }
        }
    }
    Ok(added)
}

/// Coarse ids whose σ exists and is at least `threshold`. `coarse` is the
/// query list the field was computed on.
pub fn select_hot(cf: &CurvatureField, coarse: &[(usize, Point3)], threshold: f64) -> Vec<usize> {
    cf.present()
        .filter(|&(_, s)| s >= threshold)
        .map(|(i, _)| coarse[i].0)
        .collect()
}

/// Fills every unevaluated fine vertex by the edge → face → cell averaging passes.
pub fn hierarchical_fill(grid: &mut AdaptiveGrid) -> Result<()> {
    for (id, t) in grid.tags.iter().enumerate() {
        if t.is_evaluated() && grid.values[id].is_nan() {
            return Err(Error::MissingCoarseValue(id));
        }
    }
    fill_pass(grid, FineClass::EdgeMid, Tag::Edge);
    fill_pass(grid, FineClass::FaceCenter, Tag::Face);
    fill_pass(grid, FineClass::CellCenter, Tag::Cell);
    Ok(())
}

fn fill_pass(grid: &mut AdaptiveGrid, class: FineClass, tag: Tag) {
    let spec = grid.spec;
    let n = spec.n();
    let slab = n * n;
    // slabs per batch: bounds the temporary buffer; reads never touch this pass's class
    let batch = (n / 8).max(1);
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        let updates: Vec<(usize, f64)> = (start * slab..end * slab)
            .into_par_iter()
            .filter_map(|id| {
                if grid.tags[id] != Tag::Unset {
                    return None;
                }
                let idx = spec.index(id);
                if classify_fine(idx) != class {
                    return None;
                }
                Some((id, neighbor_mean(grid, idx)))
            })
            .collect();
        for (id, v) in updates {
            grid.values[id] = v;
            grid.tags[id] = tag;
        }
        start = end;
    }
}

/// Mean over the ±1 neighbors along each odd axis that lie inside the lattice.
fn neighbor_mean(grid: &AdaptiveGrid, idx: [usize; 3]) -> f64 {
    let spec = grid.spec;
    let last = spec.fine_cells();
    let mut sum = 0.0;
    let mut count = 0usize;
    for axis in 0..3 {
        if idx[axis].is_multiple_of(2) {
            continue;
        }
        for delta in [-1isize, 1] {
            let c = idx[axis] as isize + delta;
            if c < 0 || c as usize > last {
                continue;
            }
            let mut nb = idx;
            nb[axis] = c as usize;
            let v = grid.values[spec.id(nb)];
            if !v.is_nan() {
                sum += v;
                count += 1;
            }
        }
    }
    sum / count as f64
}

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

/// Writes the dense field as little-endian f32 in id order, plus a text
/// sidecar `<path>.hdr` holding `n n n margin_cells`.
pub fn write_dense_field(path: &Path, spec: &LatticeSpec, values: &[f64]) -> Result<()> {
    if values.len() != spec.total_fine_vertices() {
        return Err(Error::EmptyField);
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &v in values {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    let n = spec.n();
    fs::write(header_path(path), format!("{n} {n} {n} {}\n", spec.margin_cells))?;
    Ok(())
}

pub fn read_dense_field(path: &Path) -> Result<(LatticeSpec, Vec<f64>)> {
    let header = fs::read_to_string(header_path(path))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                location: Location::Line(1),
                message: format!("bad header value '{t}'"),
            })
        })
        .collect::<Result<_>>()?;
    if nums.len() != 4 || nums[0] != nums[1] || nums[1] != nums[2] || nums[0] < 3 || nums[0].is_multiple_of(2) {
        return Err(Error::parse_line(1, "header must be 'n n n margin' with odd n >= 3"));
    }
    let spec = LatticeSpec::new((nums[0] - 1) / 2, nums[3])?;
    let bytes = fs::read(path)?;
    if bytes.len() != 4 * spec.total_fine_vertices() {
        return Err(Error::parse_byte(
            bytes.len(),
            format!("expected {} f32 values", spec.total_fine_vertices()),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((spec, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::Percentiles;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(coarse: usize) -> LatticeSpec {
        LatticeSpec::new(coarse, 0).unwrap()
    }

    fn evaluate_coarse(grid: &mut AdaptiveGrid, f: impl Fn(Point3) -> f64) {
        for id in grid.evaluated_ids() {
            let p = grid.spec().position(id);
            grid.set_value(id, f(p));
        }
    }

    #[test]
    fn coarse_query_examples() {
        let q = coarse_queries(&spec(1));
        assert_eq!(q.len(), 8);
        assert_eq!(q[0].1, Point3::splat(-0.5));
        assert_eq!(q[7].1, Point3::splat(0.5));
        let s = LatticeSpec::new(128, 3).unwrap();
        assert_eq!(coarse_queries(&s).len(), 2_146_689);
        assert_eq!(coarse_queries(&s)[0].1, Point3::splat(s.domain_min()));
        assert!(LatticeSpec::new(6, 3).is_err());
    }

    #[test]
    fn lattice_geometry() {
        let s = LatticeSpec::new(16, 3).unwrap();
        assert_eq!(s.n(), 33);
        assert!((s.coarse_cell_edge() - 0.1).abs() < 1e-15);
        assert!((s.domain_min() + 0.8).abs() < 1e-15);
        let id = s.id([4, 6, 8]);
        assert_eq!(s.index(id), [4, 6, 8]);
        assert!(s.is_coarse(id));
        assert!(!s.is_coarse(s.id([4, 5, 8])));
        // coarse vertex (a,b,c) sits at fine (2a,2b,2c)
        let p = s.position_of([32, 0, 16]);
        assert!((p.x - 0.8).abs() < 1e-12 && (p.z - 0.0).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_fine([4, 6, 8]), FineClass::Vertex);
        assert_eq!(classify_fine([3, 6, 8]), FineClass::EdgeMid);
        assert_eq!(classify_fine([3, 5, 8]), FineClass::FaceCenter);
        assert_eq!(classify_fine([3, 5, 7]), FineClass::CellCenter);
    }

    #[test]
    fn classify_matches_geometry() {
        // coarse lattice of 2 cells = 5³ fine vertices; classify by the
        // dimension of the coarse cell feature a vertex sits in the middle of
        let s = spec(2);
        let h = s.coarse_cell_edge();
        for id in 0..s.total_fine_vertices() {
            let p = s.position(id);
            let on_coarse = |x: f64| {
                let t = (x - s.domain_min()) / h;
                (t - t.round()).abs() < 1e-9
            };
            let free_axes = [p.x, p.y, p.z].iter().filter(|&&x| !on_coarse(x)).count();
            let want = [FineClass::Vertex, FineClass::EdgeMid, FineClass::FaceCenter, FineClass::CellCenter][free_axes];
            assert_eq!(classify_fine(s.index(id)), want);
        }
    }

    #[test]
    fn refine_counts() {
        let s = spec(8);
        let mut g = AdaptiveGrid::new(s);
        let center = s.id([8, 8, 8]);
        assert_eq!(refine(&mut g, &[center]).unwrap().len(), 26);
        assert!(refine(&mut g, &[center]).unwrap().is_empty());

        let mut g = AdaptiveGrid::new(s);
        let a = s.id([6, 8, 8]);
        let b = s.id([8, 8, 8]);
        assert_eq!(refine(&mut g, &[a, b]).unwrap().len(), 43);

        let mut g = AdaptiveGrid::new(s);
        assert_eq!(refine(&mut g, &[s.id([0, 0, 0])]).unwrap().len(), 7);
        assert_eq!(refine(&mut g, &[s.id([16, 16, 16])]).unwrap().len(), 7);

        assert!(matches!(
            refine(&mut g, &[s.id([1, 0, 0])]),
            Err(Error::NotCoarseVertex(_))
        ));
    }

    #[test]
    fn adjacent_refinement_by_enumeration() {
        // enumerate both 27-blocks directly and subtract overlap and coarse members
        let s = spec(8);
        let block = |c: [usize; 3]| {
            let mut v = Vec::new();
            for a in 0..3 {
                for b in 0..3 {
                    for d in 0..3 {
                        v.push([c[0] + a - 1, c[1] + b - 1, c[2] + d - 1]);
                    }
                }
            }
            v
        };
        let mut all = block([6, 8, 8]);
        all.extend(block([8, 8, 8]));
        all.sort();
        all.dedup();
        let want = all.iter().filter(|i| classify_fine(**i) != FineClass::Vertex).count();
        let mut g = AdaptiveGrid::new(s);
        let got = refine(&mut g, &[s.id([6, 8, 8]), s.id([8, 8, 8])]).unwrap();
        assert_eq!(got.len(), want);
        assert_eq!(want, 43);
    }

    #[test]
    fn fill_is_exact_on_affine_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = LatticeSpec::new(8, 1).unwrap();
        for _ in 0..10 {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            let f = |p: Point3| a * p.x + b * p.y + c * p.z + d;
            let mut g = AdaptiveGrid::new(s);
            let hot: Vec<_> = coarse_queries(&s).iter().step_by(5).map(|q| q.0).collect();
            refine(&mut g, &hot).unwrap();
            evaluate_coarse(&mut g, f);
            hierarchical_fill(&mut g).unwrap();
            for (id, v) in g.dense().unwrap().iter().enumerate() {
                assert!((v - f(s.position(id))).abs() < 1e-12);
            }
            assert_eq!(g.evaluated_count() + g.filled_count(), s.total_fine_vertices());
        }
    }

    #[test]
    fn fill_constant_and_no_overwrite() {
        let s = spec(4);
        let mut g = AdaptiveGrid::new(s);
        let hot = [s.id([4, 4, 4])];
        let added = refine(&mut g, &hot).unwrap();
        evaluate_coarse(&mut g, |_| 2.5);
        // refined vertices get a distinct value that must survive the fill
        for &id in &added {
            g.set_value(id, 9.0);
        }
        hierarchical_fill(&mut g).unwrap();
        for &id in &added {
            assert_eq!(g.value(id), Some(9.0));
        }
        let untouched = s.id([1, 1, 1]);
        assert_eq!(g.tag(untouched), Tag::Cell);
        assert_eq!(g.value(untouched), Some(2.5));
    }

    #[test]
    fn fill_matches_hand_evaluator() {
        // straightforward sequential evaluator on a 2-cell lattice
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = spec(2);
        let n = s.n();
        let mut g = AdaptiveGrid::new(s);
        let mut want = vec![f64::NAN; n * n * n];
        for (id, _) in coarse_queries(&s) {
            let v: f64 = rng.random();
            g.set_value(id, v);
            want[id] = v;
        }
        hierarchical_fill(&mut g).unwrap();
        let at = |w: &Vec<f64>, i: usize, j: usize, k: usize| w[(i * n + j) * n + k];
        for odd in 1..=3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if [i, j, k].iter().filter(|c| *c % 2 == 1).count() != odd {
                            continue;
                        }
                        let mut acc = Vec::new();
                        if i % 2 == 1 {
                            acc.push(at(&want, i - 1, j, k));
                            acc.push(at(&want, i + 1, j, k));
                        }
                        if j % 2 == 1 {
                            acc.push(at(&want, i, j - 1, k));
                            acc.push(at(&want, i, j + 1, k));
                        }
                        if k % 2 == 1 {
                            acc.push(at(&want, i, j, k - 1));
                            acc.push(at(&want, i, j, k + 1));
                        }
                        want[(i * n + j) * n + k] = acc.iter().sum::<f64>() / acc.len() as f64;
                    }
                }
            }
        }
        for (a, b) in g.dense().unwrap().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fill_requires_evaluated_values() {
        let mut g = AdaptiveGrid::new(spec(2));
        assert!(matches!(hierarchical_fill(&mut g), Err(Error::MissingCoarseValue(0))));
    }

    #[test]
    fn hot_selection() {
        let s = spec(1);
        let coarse = coarse_queries(&s);
        let sigma = vec![Some(0.0), None, Some(0.1), Some(0.2), None, None, Some(0.05), Some(0.3)];
        let cf = CurvatureField {
            sigma: sigma.clone(),
            percentiles: Percentiles { p10: 0.0, p40: 0.0, p60: 0.0, p90: 0.0 },
        };
        assert!(select_hot(&cf, &coarse, 0.34).is_empty());
        assert_eq!(select_hot(&cf, &coarse, 0.0).len(), 5);
        let want: Vec<_> = sigma
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some_and(|s| s >= 0.1))
            .map(|(i, _)| coarse[i].0)
            .collect();
        assert_eq!(select_hot(&cf, &coarse, 0.1), want);
    }

    #[test]
    fn dense_field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        let s = LatticeSpec::new(4, 1).unwrap();
        let values: Vec<f64> = (0..s.total_fine_vertices()).map(|i| i as f64 * 0.25).collect();
        write_dense_field(&path, &s, &values).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("field.bin.hdr")).unwrap(), "9 9 9 1\n");
        let (s2, v2) = read_dense_field(&path).unwrap();
        assert_eq!(s2, s);
        assert_eq!(v2, values);
    }
}
