use std::collections::BinaryHeap;

use super::squared_distance;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize, dim: usize, value: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    /// Offset into `KdTree::bounds`; `2 * dim` values: lows then highs.
    bounds: usize,
}

/// Static k-d tree over a row-major point matrix, split at the median of the
/// widest coordinate. Each node keeps its tight bounding box so pruning bounds
/// never exceed the true squared distance of a contained point.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    bounds: Vec<f64>,
}

/// Candidate ordered lexicographically by `(d2, index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand(f64, usize);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl KdTree {
    pub fn build(points: &[f64], dim: usize) -> KdTree {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        let mut tree = KdTree {
            dim,
            perm: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            bounds: Vec::new(),
        };
        if n > 0 {
            tree.build_node(points, 0, n);
        }
        tree
    }

    fn build_node(&mut self, points: &[f64], start: usize, end: usize) -> usize {
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.perm[start..end] {
            let p = &points[i * dim..(i + 1) * dim];
            for j in 0..dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let bounds = self.bounds.len();
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind: NodeKind::Leaf { start, end },
            bounds,
        });
        let (split_dim, spread) = (0..dim)
            .map(|j| (j, hi[j] - lo[j]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("dim > 0");
        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + split_dim].total_cmp(&points[b * dim + split_dim])
        });
        let value = points[self.perm[mid] * dim + split_dim];
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id].kind = NodeKind::Split {
            left,
            right,
            dim: split_dim,
            value,
        };
        id
    }

    fn box_distance(&self, node: &Node, z: &[f64]) -> f64 {
        let (lo, hi) = self.bounds[node.bounds..node.bounds + 2 * self.dim].split_at(self.dim);
        let mut s = 0.0;
        for j in 0..self.dim {
            let d = if z[j] < lo[j] {
                lo[j] - z[j]
            } else if z[j] > hi[j] {
                z[j] - hi[j]
            } else {
                0.0
            };
            s += d * d;
        }
        s
    }

    /// The `m` smallest `(d2, index)` pairs accepted by `keep`, ascending.
    pub fn nearest<F: Fn(usize, f64) -> bool>(&self, points: &[f64], z: &[f64], m: usize, keep: F) -> Vec<(f64, usize)> {
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(m + 1);
        if m > 0 && !self.nodes.is_empty() {
            self.search(0, points, z, m, &keep, &mut heap);
        }
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|c| (c.0, c.1)).collect();
        out.sort_by(|a, b| Cand(a.0, a.1).cmp(&Cand(b.0, b.1)));
        out
    }

    fn search<F: Fn(usize, f64) -> bool>(
        &self,
        node_id: usize,
        points: &[f64],
        z: &[f64],
        m: usize,
        keep: &F,
        heap: &mut BinaryHeap<Cand>,
    ) {
        let node = &self.nodes[node_id];
        if heap.len() == m {
            let worst = heap.peek().expect("full heap").0;
            // equal bounds must still be visited: ties are decided by index
            if self.box_distance(node, z) > worst {
                return;
            }
        }
        match node.kind {
            NodeKind::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let d2 = squared_distance(&points[i * self.dim..(i + 1) * self.dim], z);
                    let c = Cand(d2, i);
                    if heap.len() == m && c >= *heap.peek().expect("full heap") {
                        continue;
                    }
                    if !keep(i, d2) {
                        continue;
                    }
                    heap.push(c);
                    if heap.len() > m {
                        heap.pop();
                    }
                }
            }
            NodeKind::Split { left, right, dim, value } => {
                let (first, second) = if z[dim] < value { (left, right) } else { (right, left) };
                self.search(first, points, z, m, keep, heap);
                self.search(second, points, z, m, keep, heap);
            }
        }
    }

    /// All `(d2, index)` with `sqrt(d2) < radius` accepted by `keep`, unordered.
    pub fn within<F: Fn(usize, f64) -> bool>(&self, points: &[f64], z: &[f64], radius: f64, keep: F) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if self.box_distance(node, z).sqrt() >= radius {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &i in &self.perm[start..end] {
                        let d2 = squared_distance(&points[i * self.dim..(i + 1) * self.dim], z);
                        if d2.sqrt() < radius && keep(i, d2) {
                            out.push((d2, i));
                        }
                    }
                }
                NodeKind::Split { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out
    }
}
