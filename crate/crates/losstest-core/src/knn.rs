//! Nearest-neighbor ordering and the k-NN regression estimate.
//!
//! Neighbors are ranked by squared Euclidean distance with exact ties
//! broken by smaller training index, i.e. candidates compare as
//! (distance², index) pairs. The estimate at a query is the mean label of
//! its k nearest training points.
//!
//! Two tie policies are offered. `IndexOrder` applies the deterministic
//! index rule directly. `Jitter` appends one persistent uniform [0,1]
//! auxiliary coordinate to every point before measuring distances, which
//! makes exact ties between distinct training points an event of measure
//! zero; any residual ties still fall back to the index rule.
//!
//! [`knn_order`] is the exhaustive-scan reference. Batch evaluation runs
//! through the [`crate::kdtree::KdTree`] accelerator, which is required to
//! reproduce the scan exactly, ties included.

use alloc::vec::Vec;

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::rng::{splitmix64, RngSpec};

/// How exact distance ties between training points are resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TiePolicy {
    /// Smaller training index wins.
    IndexOrder,
    /// Augment every point with a seeded uniform auxiliary coordinate.
    Jitter(RngSpec),
}

/// The k training points nearest to one query.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    /// Training-row indices, nearest first.
    pub indices: Vec<usize>,
    /// Euclidean distances, nondecreasing, parallel to `indices`.
    pub distances: Vec<f64>,
    /// Training points excluded from the list only by the index tie rule:
    /// their distance equals the k-th selected distance exactly.
    pub ties: usize,
}

// ---------------------------------------------------------------------------
// k-best accumulator
// ---------------------------------------------------------------------------

/// Keeps the k smallest (distance², index) candidates seen so far and
/// counts how many rejected candidates tie the current k-th distance.
///
/// The final tie count equals the number of points outside the list whose
/// distance² equals the k-th distance², independent of arrival order.
pub(crate) struct KBest {
    k: usize,
    entries: Vec<(f64, usize)>,
    boundary_ties: usize,
}

impl KBest {
    pub(crate) fn new(k: usize) -> Self {
        KBest {
            k,
            entries: Vec::with_capacity(k + 1),
            boundary_ties: 0,
        }
    }

    #[inline]
    fn insert_sorted(&mut self, d2: f64, idx: usize) {
        let pos = self
            .entries
            .iter()
            .position(|&(ed, ei)| d2 < ed || (d2 == ed && idx < ei))
            .unwrap_or(self.entries.len());
        self.entries.insert(pos, (d2, idx));
    }

    #[inline]
    pub(crate) fn offer(&mut self, d2: f64, idx: usize) {
        if self.entries.len() < self.k {
            self.insert_sorted(d2, idx);
            return;
        }
        let (worst_d2, worst_idx) = *self.entries.last().expect("k >= 1");
        if d2 < worst_d2 || (d2 == worst_d2 && idx < worst_idx) {
            let evicted = self.entries.pop().expect("nonempty");
            self.insert_sorted(d2, idx);
            let new_level = self.entries.last().expect("nonempty").0;
            if new_level < worst_d2 {
                // ties counted at the old level can no longer matter
                self.boundary_ties = 0;
            }
            if evicted.0 == new_level {
                self.boundary_ties += 1;
            }
        } else if d2 == worst_d2 {
            self.boundary_ties += 1;
        }
    }

    /// Current pruning bound: reject a candidate only if its distance² is
    /// strictly greater than this (equal must still be offered).
    #[inline]
    pub(crate) fn prune_bound(&self) -> Option<f64> {
        if self.entries.len() < self.k {
            None
        } else {
            Some(self.entries.last().expect("k >= 1").0)
        }
    }

    pub(crate) fn into_list(self) -> NeighborList {
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut distances = Vec::with_capacity(self.entries.len());
        for (d2, i) in self.entries {
            indices.push(i);
            distances.push(libm::sqrt(d2));
        }
        NeighborList {
            indices,
            distances,
            ties: self.boundary_ties,
        }
    }
}

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        let t = a[j] - b[j];
        s += t * t;
    }
    s
}

// ---------------------------------------------------------------------------
// jitter augmentation
// ---------------------------------------------------------------------------

const TRAIN_AUX_TAG: u64 = 0x7472_6169_6e5f; // training-side stream
const QUERY_AUX_TAG: u64 = 0x7175_6572_795f; // query-side hash base

/// One auxiliary coordinate per training row, row i taking the i-th draw
/// of the train-side stream.
pub(crate) fn train_aux(seed: &RngSpec, n: usize) -> Vec<f64> {
    let mut rng = seed.substream(TRAIN_AUX_TAG).rng();
    (0..n).map(|_| rng.random()).collect()
}

/// Auxiliary coordinate for a free-standing query point.
///
/// Keyed by the query's coordinate bit patterns, so the same point always
/// receives the same coordinate and batch evaluation matches a per-query
/// loop.
pub(crate) fn query_aux(seed: &RngSpec, q: &[f64]) -> f64 {
    let mut h = QUERY_AUX_TAG;
    for &c in q {
        h = splitmix64(h ^ c.to_bits());
    }
    seed.substream(h).rng().random()
}

/// Appends `aux[i]` as an extra trailing column to every row.
pub(crate) fn augment(features: &[f64], d: usize, aux: &[f64]) -> Vec<f64> {
    let n = aux.len();
    let mut out = Vec::with_capacity(n * (d + 1));
    for i in 0..n {
        out.extend_from_slice(&features[i * d..(i + 1) * d]);
        out.push(aux[i]);
    }
    out
}

fn check_shape(features: &[f64], d: usize, query: &[f64], k: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if features.len() % d != 0 {
        return Err(Error::ShapeMismatch {
            expected: (features.len() / d) * d,
            got: features.len(),
        });
    }
    if query.len() != d {
        return Err(Error::ShapeMismatch {
            expected: d,
            got: query.len(),
        });
    }
    let n = features.len() / d;
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if k > n {
        return Err(Error::InsufficientNeighbors { k, n });
    }
    Ok(n)
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// The k nearest training rows to `query`, by exhaustive scan.
///
/// `features` is row-major n×d. This is the reference path every
/// accelerated index is tested against.
pub fn knn_order(features: &[f64], d: usize, query: &[f64], k: usize, policy: &TiePolicy) -> Result<NeighborList> {
    let n = check_shape(features, d, query, k)?;
    match policy {
        TiePolicy::IndexOrder => Ok(scan(features, d, query, k)),
        TiePolicy::Jitter(seed) => {
            let aug = augment(features, d, &train_aux(seed, n));
            let mut q = query.to_vec();
            q.push(query_aux(seed, query));
            Ok(scan(&aug, d + 1, &q, k))
        }
    }
}

fn scan(features: &[f64], d: usize, query: &[f64], k: usize) -> NeighborList {
    let n = features.len() / d;
    let mut best = KBest::new(k);
    for i in 0..n {
        best.offer(dist2(&features[i * d..(i + 1) * d], query), i);
    }
    best.into_list()
}

/// Mean label of the k training points nearest to `query`.
pub fn knn_estimate(train: &Dataset, query: &[f64], k: usize, policy: &TiePolicy) -> Result<f64> {
    let list = knn_order(train.features(), train.d(), query, k, policy)?;
    Ok(mean_label(train.labels(), &list.indices))
}

/// [`knn_estimate`] over an m×d batch of queries, via the kd-tree index.
pub fn knn_estimate_batch(train: &Dataset, queries: &[f64], k: usize, policy: &TiePolicy) -> Result<Vec<f64>> {
    let lists = batch_neighbors(train.features(), train.d(), queries, k, policy)?;
    Ok(lists
        .iter()
        .map(|l| mean_label(train.labels(), &l.indices))
        .collect())
}

/// Neighbor lists for every query row, computed through the kd-tree.
///
/// Jitter augmentation (train rows by index, queries by coordinate hash)
/// is applied before indexing, exactly as [`knn_order`] does per query.
pub(crate) fn batch_neighbors(
    features: &[f64],
    d: usize,
    queries: &[f64],
    k: usize,
    policy: &TiePolicy,
) -> Result<Vec<NeighborList>> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if queries.len() % d != 0 {
        return Err(Error::ShapeMismatch {
            expected: (queries.len() / d) * d,
            got: queries.len(),
        });
    }
    match policy {
        TiePolicy::IndexOrder => {
            let tree = KdTree::build(features, d)?;
            queries.chunks(d).map(|q| tree.query(q, k)).collect()
        }
        TiePolicy::Jitter(seed) => {
            let n = features.len() / d;
            let aug = augment(features, d, &train_aux(seed, n));
            let tree = KdTree::build(&aug, d + 1)?;
            queries
                .chunks(d)
                .map(|q| {
                    let mut aq = q.to_vec();
                    aq.push(query_aux(seed, q));
                    tree.query(&aq, k)
                })
                .collect()
        }
    }
}

pub(crate) fn mean_label(labels: &[f64], indices: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in indices {
        s += labels[i];
    }
    s / indices.len() as f64
}
