//! Exact kd-tree accelerator for nearest-neighbor queries.
//!
//! Same contract as the exhaustive scan in [`crate::knn`], bit for bit:
//! candidates are ranked by (distance², training index) and a subtree is
//! pruned only when the minimum possible distance² to its bounding box is
//! strictly greater than the current k-th distance². Equality descends,
//! so every point that could tie the k-th neighbor is still visited and
//! the index tie rule and tie counts come out identical to the scan.
//!
//! Nodes carry the exact bounding box of their points. For any point p
//! inside a box, the accumulated box distance is computed with the same
//! per-coordinate operations and summation order as `dist2(p, q)`, and
//! IEEE rounding is monotone, so the computed bound never exceeds the
//! computed point distance. That makes the strict-greater prune safe in
//! floating point, not just in exact arithmetic.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::knn::{dist2, KBest, NeighborList};

const LEAF_SIZE: usize = 12;

enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

struct Node {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    kind: NodeKind,
}

/// Spatial index over a fixed row-major n×d point set.
pub struct KdTree {
    d: usize,
    n: usize,
    /// Points copied in tree order.
    pts: Vec<f64>,
    /// Tree-order row → original training index.
    orig: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl KdTree {
    /// Builds the index. All values must be finite.
    pub fn build(features: &[f64], d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if features.len() % d != 0 {
            return Err(Error::ShapeMismatch {
                expected: (features.len() / d) * d,
                got: features.len(),
            });
        }
        let n = features.len() / d;
        if n == 0 {
            return Err(Error::InvalidData("cannot index an empty point set".into()));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite coordinate at row {}, column {}",
                pos / d,
                pos % d
            )));
        }

        let mut perm: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        let root = build_rec(features, d, &mut perm, 0, &mut nodes);

        let mut pts = Vec::with_capacity(n * d);
        for &p in &perm {
            pts.extend_from_slice(&features[p * d..(p + 1) * d]);
        }
        Ok(KdTree {
            d,
            n,
            pts,
            orig: perm,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // build rejects empty point sets
    }

    /// The k nearest indexed points to `q`, identical to the exhaustive
    /// scan's output including boundary tie counts.
    pub fn query(&self, q: &[f64], k: usize) -> Result<NeighborList> {
        if q.len() != self.d {
            return Err(Error::ShapeMismatch {
                expected: self.d,
                got: q.len(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite query coordinate".into()));
        }
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        if k > self.n {
            return Err(Error::InsufficientNeighbors { k, n: self.n });
        }
        let mut best = KBest::new(k);
        self.search(self.root, q, &mut best);
        Ok(best.into_list())
    }

    fn search(&self, node: usize, q: &[f64], best: &mut KBest) {
        match self.nodes[node].kind {
            NodeKind::Leaf { start, end } => {
                for r in start..end {
                    let p = &self.pts[r * self.d..(r + 1) * self.d];
                    best.offer(dist2(p, q), self.orig[r]);
                }
            }
            NodeKind::Split { left, right } => {
                let dl = self.bbox_dist2(left, q);
                let dr = self.bbox_dist2(right, q);
                let (near, d_near, far, d_far) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                if admit(d_near, best) {
                    self.search(near, q, best);
                }
                if admit(d_far, best) {
                    self.search(far, q, best);
                }
            }
        }
    }

    /// Minimum possible distance² from `q` to any point in the node's box.
    fn bbox_dist2(&self, node: usize, q: &[f64]) -> f64 {
        let nd = &self.nodes[node];
        let mut s = 0.0;
        for j in 0..self.d {
            let v = q[j];
            let t = if v < nd.mins[j] {
                nd.mins[j] - v
            } else if v > nd.maxs[j] {
                v - nd.maxs[j]
            } else {
                0.0
            };
            s += t * t;
        }
        s
    }
}

#[inline]
fn admit(bound_d2: f64, best: &KBest) -> bool {
    match best.prune_bound() {
        None => true,
        Some(w) => bound_d2 <= w,
    }
}

fn build_rec(features: &[f64], d: usize, perm: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let mut mins = features[perm[0] * d..perm[0] * d + d].to_vec();
    let mut maxs = mins.clone();
    for &p in perm.iter().skip(1) {
        for j in 0..d {
            let v = features[p * d + j];
            if v < mins[j] {
                mins[j] = v;
            }
            if v > maxs[j] {
                maxs[j] = v;
            }
        }
    }

    if perm.len() <= LEAF_SIZE {
        nodes.push(Node {
            mins,
            maxs,
            kind: NodeKind::Leaf {
                start: offset,
                end: offset + perm.len(),
            },
        });
        return nodes.len() - 1;
    }

    let axis = (0..d)
        .max_by(|&a, &b| {
            let ea = maxs[a] - mins[a];
            let eb = maxs[b] - mins[b];
            ea.partial_cmp(&eb).expect("finite extents")
        })
        .expect("d >= 1");
    let mid = perm.len() / 2;
    perm.select_nth_unstable_by(mid, |&a, &b| {
        let ca = features[a * d + axis];
        let cb = features[b * d + axis];
        ca.partial_cmp(&cb).expect("finite coordinates").then(a.cmp(&b))
    });
    let (lo, hi) = perm.split_at_mut(mid);
    let left = build_rec(features, d, lo, offset, nodes);
    let right = build_rec(features, d, hi, offset + mid, nodes);
    nodes.push(Node {
        mins,
        maxs,
        kind: NodeKind::Split { left, right },
    });
    nodes.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{knn_order, TiePolicy};
    use crate::rng::RngSpec;
    use alloc::vec;
    use rand::Rng;

    fn assert_matches_scan(features: &[f64], d: usize, queries: &[f64], k: usize) {
        let tree = KdTree::build(features, d).unwrap();
        for q in queries.chunks(d) {
            let fast = tree.query(q, k).unwrap();
            let slow = knn_order(features, d, q, k, &TiePolicy::IndexOrder).unwrap();
            assert_eq!(fast, slow, "divergence at query {q:?}, k={k}");
        }
    }

    #[test]
    fn matches_scan_on_random_points() {
        let mut rng = RngSpec::new(2024, 0).rng();
        let n = 200;
        let d = 5;
        let features: Vec<f64> = (0..n * d).map(|_| rng.random()).collect();
        let queries: Vec<f64> = (0..50 * d).map(|_| rng.random()).collect();
        assert_matches_scan(&features, d, &queries, 7);
    }

    #[test]
    fn matches_scan_on_duplicate_heavy_lattice() {
        // coordinates drawn from {0, 0.5, 1.0} force many exact ties
        let mut rng = RngSpec::new(7, 1).rng();
        for trial in 0..20 {
            let n = 2 + (trial * 7) % 60;
            let d = 1 + trial % 4;
            let features: Vec<f64> = (0..n * d).map(|_| (rng.random_range(0..3u32) as f64) * 0.5).collect();
            let queries: Vec<f64> = (0..10 * d).map(|_| (rng.random_range(0..3u32) as f64) * 0.5).collect();
            for k in [1, 2, n.min(5), n] {
                assert_matches_scan(&features, d, &queries, k);
            }
        }
    }

    #[test]
    fn all_points_identical() {
        let features = vec![0.25; 40 * 3];
        let tree = KdTree::build(&features, 3).unwrap();
        let list = tree.query(&[0.25, 0.25, 0.25], 4).unwrap();
        assert_eq!(list.indices, vec![0, 1, 2, 3]);
        assert_eq!(list.ties, 36);
        assert_eq!(list.distances, vec![0.0; 4]);
    }

    #[test]
    fn single_point_tree() {
        let tree = KdTree::build(&[1.0, 2.0], 2).unwrap();
        let list = tree.query(&[0.0, 0.0], 1).unwrap();
        assert_eq!(list.indices, vec![0]);
    }

    #[test]
    fn build_and_query_errors() {
        assert!(KdTree::build(&[], 2).is_err());
        assert!(KdTree::build(&[f64::NAN], 1).is_err());
        let tree = KdTree::build(&[0.0, 1.0], 1).unwrap();
        assert!(tree.query(&[0.0, 0.0], 1).is_err());
        assert!(tree.query(&[0.0], 3).is_err());
        assert!(tree.query(&[f64::INFINITY], 1).is_err());
    }
}
