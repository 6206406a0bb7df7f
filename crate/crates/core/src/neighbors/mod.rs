//! Exact k-nearest-neighbor analog search under the Euclidean metric.
//!
//! Two backends answer the same queries: an exhaustive scan and a k-d tree.
//! Both rank candidates by `(squared distance, catalog index)` computed with
//! the same arithmetic, so their outputs are identical, ties included.

mod kdtree;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::catalog::{apply_exclusion, Catalog, ExclusionPolicy};
use crate::{Error, Result};

pub use kdtree::KdTree;

/// Largest dimension for which [`Backend::Auto`] builds a k-d tree.
pub const KDTREE_MAX_DIM: usize = 20;
const KDTREE_MIN_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    pub fn cmp_by_distance(a: &Neighbor, b: &Neighbor) -> Ordering {
        a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index))
    }
}

/// Sorted analog-to-target distances for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogSet {
    pub target: Vec<f64>,
    /// Non-decreasing; ties ordered by catalog index.
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
}

impl AnalogSet {
    pub fn from_neighbors(target: &[f64], neighbors: &[Neighbor]) -> Self {
        AnalogSet {
            target: target.to_vec(),
            distances: neighbors.iter().map(|n| n.distance).collect(),
            indices: neighbors.iter().map(|n| n.index).collect(),
        }
    }

    /// Synthetic analog set from bare distances (indices are ranks).
    pub fn from_distances(distances: Vec<f64>) -> Self {
        let indices = (0..distances.len()).collect();
        AnalogSet {
            target: Vec::new(),
            distances,
            indices,
        }
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// The first `k` analogs.
    pub fn truncated(&self, k: usize) -> AnalogSet {
        let k = k.min(self.len());
        AnalogSet {
            target: self.target.clone(),
            distances: self.distances[..k].to_vec(),
            indices: self.indices[..k].to_vec(),
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Plain Euclidean distance.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Backend {
    /// k-d tree for `D <= 20` and non-trivial catalogs, otherwise exhaustive.
    #[default]
    Auto,
    Exhaustive,
    KdTree,
}

/// Per-query admissibility rules.
#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub exclusion: Option<ExclusionPolicy>,
    /// Timestamp of the target on the catalog's time axis, if it has one.
    pub target_time: Option<i64>,
    /// Drop catalog rows at distance exactly zero (the target itself).
    pub skip_exact_matches: bool,
}

impl SearchOptions {
    pub fn with_exclusion(policy: ExclusionPolicy, target_time: Option<i64>) -> Self {
        SearchOptions {
            exclusion: Some(policy),
            target_time,
            skip_exact_matches: false,
        }
    }

    pub fn skipping_exact_matches(mut self) -> Self {
        self.skip_exact_matches = true;
        self
    }
}

/// A catalog prepared for analog queries. Queries take `&self` and may run
/// concurrently.
pub struct AnalogIndex<'a> {
    catalog: &'a Catalog,
    tree: Option<KdTree>,
}

impl<'a> AnalogIndex<'a> {
    pub fn new(catalog: &'a Catalog, backend: Backend) -> Self {
        let use_tree = match backend {
            Backend::Exhaustive => false,
            Backend::KdTree => true,
            Backend::Auto => catalog.dim() <= KDTREE_MAX_DIM && catalog.len() >= KDTREE_MIN_LEN,
        };
        let tree = use_tree.then(|| KdTree::build(catalog.as_slice(), catalog.dim()));
        AnalogIndex { catalog, tree }
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    pub fn backend(&self) -> Backend {
        if self.tree.is_some() {
            Backend::KdTree
        } else {
            Backend::Exhaustive
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.catalog.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.catalog.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    fn admissible<'s>(&'s self, opts: &'s SearchOptions) -> impl Fn(usize) -> bool + 's {
        move |i| match &opts.exclusion {
            Some(p) => p.admits(self.catalog.time_of(i), opts.target_time),
            None => true,
        }
    }

    /// The `m` nearest admissible rows, ascending by `(distance, index)`.
    fn nearest(&self, z: &[f64], m: usize, opts: &SearchOptions) -> Vec<Neighbor> {
        let filter = self.admissible(opts);
        let skip = opts.skip_exact_matches;
        let keep = |i: usize, d2: f64| !(skip && d2 == 0.0) && filter(i);
        let raw = match &self.tree {
            Some(t) => t.nearest(self.catalog.as_slice(), z, m, keep),
            None => exhaustive_nearest(self.catalog, z, m, keep),
        };
        raw.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// The `k` nearest admissible analogs of `z`.
    ///
    /// With run de-duplication enabled the candidate pool is grown by doubling
    /// from `2k` until `k` analogs survive or the catalog is exhausted.
    pub fn knn(&self, z: &[f64], k: usize, opts: &SearchOptions) -> Result<AnalogSet> {
        self.check_dim(z)?;
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let dedup = opts.exclusion.as_ref().filter(|p| p.dedup_neighbor_runs);
        let found = match dedup {
            None => self.nearest(z, k, opts),
            Some(policy) => {
                let mut pool = (2 * k).min(self.catalog.len());
                loop {
                    let cands = self.nearest(z, pool, opts);
                    let exhausted = cands.len() < pool || pool >= self.catalog.len();
                    let kept = apply_exclusion(&cands, opts.target_time, |i| self.catalog.time_of(i), policy);
                    if kept.len() >= k || exhausted {
                        break kept;
                    }
                    pool = (pool * 2).min(self.catalog.len());
                }
            }
        };
        if found.len() < k {
            return Err(Error::NotEnoughAnalogs {
                requested: k,
                admissible: found.len(),
            });
        }
        Ok(AnalogSet::from_neighbors(z, &found[..k]))
    }

    /// All admissible analogs strictly closer than `radius`.
    pub fn knn_radius(&self, z: &[f64], radius: f64, opts: &SearchOptions) -> Result<AnalogSet> {
        self.check_dim(z)?;
        if !(radius > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        let filter = self.admissible(opts);
        let skip = opts.skip_exact_matches;
        let keep = |i: usize, d2: f64| !(skip && d2 == 0.0) && filter(i);
        let mut raw = match &self.tree {
            Some(t) => t.within(self.catalog.as_slice(), z, radius, keep),
            None => exhaustive_within(self.catalog, z, radius, keep),
        };
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut found: Vec<Neighbor> = raw
            .into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect();
        if let Some(policy) = &opts.exclusion {
            found = apply_exclusion(&found, opts.target_time, |i| self.catalog.time_of(i), policy);
        }
        Ok(AnalogSet::from_neighbors(z, &found))
    }
}

/// Exhaustive scan: full sort of all admissible squared distances.
fn exhaustive_nearest<F: Fn(usize, f64) -> bool>(c: &Catalog, z: &[f64], m: usize, keep: F) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = c
        .rows()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, z), i))
        .filter(|&(d2, i)| keep(i, d2))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if m < all.len() {
        all.select_nth_unstable_by(m, cmp);
        all.truncate(m);
    }
    all.sort_by(cmp);
    all
}

fn exhaustive_within<F: Fn(usize, f64) -> bool>(c: &Catalog, z: &[f64], radius: f64, keep: F) -> Vec<(f64, usize)> {
    c.rows()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, z), i))
        .filter(|&(d2, i)| d2.sqrt() < radius && keep(i, d2))
        .collect()
}

/// Convenience wrapper: build an index with [`Backend::Auto`] and run one query.
pub fn knn(c: &Catalog, z: &[f64], k: usize, opts: &SearchOptions) -> Result<AnalogSet> {
    AnalogIndex::new(c, Backend::Auto).knn(z, k, opts)
}

pub fn knn_radius(c: &Catalog, z: &[f64], radius: f64, opts: &SearchOptions) -> Result<AnalogSet> {
    AnalogIndex::new(c, Backend::Auto).knn_radius(z, radius, opts)
}
