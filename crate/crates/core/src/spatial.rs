//! Static k-d tree over a point set.
//!
//! Results are exact: radius queries return the same index set as a linear
//! scan with `distance <= radius`, and nearest-neighbor queries return the
//! lowest-index point among those at minimal distance.

use crate::error::{Error, Result};
use crate::model::{PointCloud, Point3};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    lo: Point3,
    hi: Point3,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    // points stored in tree order alongside their source indices
    points: Vec<Point3>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(&cloud.points)
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(points, &mut order, 0, &mut nodes);
        Ok(Self {
            points: order.iter().map(|&i| points[i]).collect(),
            ids: order,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Source indices of all points with `distance(p, center) <= radius`, ascending.
    pub fn radius_query(&self, center: Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_query_into(center, radius, &mut out);
        out
    }

    pub fn radius_query_into(&self, center: Point3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let prune = radius * (1.0 + 1e-12);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if box_distance(center, node.lo, node.hi) > prune {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for k in start..end {
                        if self.points[k].distance(center) <= radius {
                            out.push(self.ids[k]);
                        }
                    }
                }
                NodeKind::Split { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out.sort_unstable();
    }

    /// Lowest-index nearest point and its distance.
    pub fn nearest(&self, q: Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if box_distance(q, node.lo, node.hi) > best.1 * (1.0 + 1e-12) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for k in start..end {
                        let d = self.points[k].distance(q);
                        let id = self.ids[k];
                        if d < best.1 || (d == best.1 && id < best.0) {
                            best = (id, d);
                        }
                    }
                }
                NodeKind::Split { left, right } => {
                    // visit the nearer child first
                    let dl = box_distance(q, self.nodes[left].lo, self.nodes[left].hi);
                    let dr = box_distance(q, self.nodes[right].lo, self.nodes[right].hi);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    pub fn nearest_distance(&self, q: Point3) -> f64 {
        self.nearest(q).1
    }
}

fn build_node(points: &[Point3], order: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let (lo, hi) = order.iter().fold(
        (Point3::splat(f64::INFINITY), Point3::splat(f64::NEG_INFINITY)),
        |(lo, hi), &i| (lo.min(points[i]), hi.max(points[i])),
    );
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node {
            lo,
            hi,
            kind: NodeKind::Leaf {
                start: offset,
                end: offset + order.len(),
            },
        });
        return id;
    }
    nodes.push(Node {
        lo,
        hi,
        kind: NodeKind::Leaf { start: 0, end: 0 },
    });
    let extent = hi - lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let (l, r) = order.split_at_mut(mid);
    let left = build_node(points, l, offset, nodes);
    let right = build_node(points, r, offset + mid, nodes);
    nodes[id].kind = NodeKind::Split { left, right };
    id
}

fn box_distance(q: Point3, lo: Point3, hi: Point3) -> f64 {
    let dx = (lo.x - q.x).max(0.0).max(q.x - hi.x);
    let dy = (lo.y - q.y).max(0.0).max(q.y - hi.y);
    let dz = (lo.z - q.z).max(0.0).max(q.z - hi.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}
