//! Static 3D kd-tree for exact nearest-neighbour queries.
//!
//! Built once per target cloud and read-only afterwards, so a single tree can
//! be shared between threads.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3<f64>>,
    /// Points in tree order, so leaves scan contiguous memory.
    sorted: Vec<[f64; 3]>,
    /// `sorted[k]` is `points[order[k]]`.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// A neighbour hit: original point index and squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    #[inline]
    pub fn distance(&self) -> f64 {
        self.dist_sq.sqrt()
    }

    #[inline]
    fn better_than(&self, other: &Neighbor) -> bool {
        self.dist_sq < other.dist_sq || (self.dist_sq == other.dist_sq && self.index < other.index)
    }
}

#[inline]
fn dist_sq(a: &[f64; 3], q: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - q[0], a[1] - q[1], a[2] - q[2]);
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut tree = KdTree {
            points: cloud.points.clone(),
            sorted: Vec::new(),
            order: (0..cloud.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, cloud.len());
        tree.sorted = tree.order.iter().map(|&i| tree.points[i].coords.into()).collect();
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of widest spread
        let mut lo = [f64::MAX; 3];
        let mut hi = [f64::MIN; 3];
        for &i in &self.order[start..end] {
            for d in 0..3 {
                lo[d] = lo[d].min(self.points[i][d]);
                hi[d] = hi[d].max(self.points[i][d]);
            }
        }
        let dim = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim].total_cmp(&points[b][dim])
        });
        let value = self.points[self.order[mid]][dim];

        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// Exact nearest neighbour. Ties resolve to the lowest index.
    pub fn nearest(&self, query: &Point3<f64>) -> Neighbor {
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: f64::INFINITY,
        };
        let q: [f64; 3] = query.coords.into();
        self.nearest_in(0, &q, [0.0; 3], 0.0, &mut best);
        best
    }

    /// Nearest neighbour within `max_dist_sq` (inclusive), if any. Same
    /// answer as [`Self::nearest`] when it lies inside the radius, but far
    /// queries prune almost the whole tree.
    pub fn nearest_within(&self, query: &Point3<f64>, max_dist_sq: f64) -> Option<Neighbor> {
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: max_dist_sq,
        };
        let q: [f64; 3] = query.coords.into();
        self.nearest_in(0, &q, [0.0; 3], 0.0, &mut best);
        (best.index != usize::MAX).then_some(best)
    }

    /// `off` holds the per-axis gap between the query and the node's cell and
    /// `rd` its squared norm, a lower bound on any distance inside the cell.
    fn nearest_in(&self, node: usize, q: &[f64; 3], mut off: [f64; 3], rd: f64, best: &mut Neighbor) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for k in start..end {
                    let cand = Neighbor {
                        index: self.order[k],
                        dist_sq: dist_sq(&self.sorted[k], q),
                    };
                    if cand.better_than(best) {
                        *best = cand;
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, off, rd, best);
                let far_rd = rd - off[dim] * off[dim] + diff * diff;
                if far_rd <= best.dist_sq {
                    off[dim] = diff;
                    self.nearest_in(far, q, off, far_rd, best);
                }
            }
        }
    }

    /// The `k` nearest neighbours sorted by increasing distance.
    pub fn k_nearest(&self, query: &Point3<f64>, k: usize) -> Vec<Neighbor> {
        let mut found: Vec<Neighbor> = Vec::with_capacity(k + 1);
        if k > 0 {
            let q: [f64; 3] = query.coords.into();
            self.k_nearest_in(0, &q, k, [0.0; 3], 0.0, &mut found);
        }
        found
    }

    fn k_nearest_in(
        &self,
        node: usize,
        q: &[f64; 3],
        k: usize,
        mut off: [f64; 3],
        rd: f64,
        found: &mut Vec<Neighbor>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for j in start..end {
                    let cand = Neighbor {
                        index: self.order[j],
                        dist_sq: dist_sq(&self.sorted[j], q),
                    };
                    if found.len() < k || cand.better_than(found.last().unwrap()) {
                        let pos = found.partition_point(|n| n.better_than(&cand));
                        found.insert(pos, cand);
                        found.truncate(k);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, off, rd, found);
                let far_rd = rd - off[dim] * off[dim] + diff * diff;
                if found.len() < k || far_rd <= found.last().unwrap().dist_sq {
                    off[dim] = diff;
                    self.k_nearest_in(far, q, k, off, far_rd, found);
                }
            }
        }
    }
}

/// Index and distance of the nearest point of `target` to `query`.
pub fn nearest_neighbor_index(query: &Point3<f64>, target: &PointCloud) -> Result<(usize, f64)> {
    let tree = KdTree::build(target)?;
    let n = tree.nearest(query);
    Ok((n.index, n.distance()))
}
