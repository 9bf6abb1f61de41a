//! Instance-based nearest-neighbor search under the overlap (Hamming)
//! distance on categorical codes. Two interchangeable indexes: a brute
//! force linear scan and a ball tree that must return exactly the same
//! neighbor sets, ties at the k-th distance resolved by record index.

use std::collections::BinaryHeap;

use crate::dataset::{ClassLabel, Dataset};

use super::{ClassProbabilities, ClassifierError};

/// Number of attribute positions at which two code vectors differ.
pub fn overlap_distance(a: &[u16], b: &[u16]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexVariant {
    LinearScan,
    BallTree,
}

impl IndexVariant {
    pub fn name(self) -> &'static str {
        match self {
            IndexVariant::LinearScan => "linear-scan",
            IndexVariant::BallTree => "ball-tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BallNode {
    Leaf {
        center: usize,
        radius: u32,
        lo: usize,
        hi: usize,
    },
    Internal {
        center: usize,
        radius: u32,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    variant: IndexVariant,
    points: Vec<Vec<u16>>,
    labels: Vec<ClassLabel>,
    // ball-tree arena; empty for the linear variant
    nodes: Vec<BallNode>,
    order: Vec<usize>,
}

const LEAF_SIZE: usize = 8;

impl NeighborIndex {
    pub fn build(dataset: &Dataset, variant: IndexVariant) -> Result<NeighborIndex, ClassifierError> {
        if dataset.is_empty() {
            return Err(ClassifierError::EmptyIndex);
        }
        let points: Vec<Vec<u16>> = dataset.records().iter().map(|r| r.codes.clone()).collect();
        let labels: Vec<ClassLabel> = dataset.records().iter().map(|r| r.label).collect();
        Self::from_parts(points, labels, variant)
    }

    /// Rebuilds an index from stored points and labels (persistence
    /// path); ball-tree construction is deterministic, so a reloaded
    /// index answers queries identically.
    pub(crate) fn from_parts(
        points: Vec<Vec<u16>>,
        labels: Vec<ClassLabel>,
        variant: IndexVariant,
    ) -> Result<NeighborIndex, ClassifierError> {
        if points.is_empty() {
            return Err(ClassifierError::EmptyIndex);
        }
        assert_eq!(points.len(), labels.len());
        let mut index = NeighborIndex {
            variant,
            points,
            labels,
            nodes: Vec::new(),
            order: Vec::new(),
        };
        if variant == IndexVariant::BallTree {
            index.order = (0..index.points.len()).collect();
            let n = index.points.len();
            build_subtree(&index.points, &mut index.order, &mut index.nodes, 0, n);
        }
        Ok(index)
    }

    pub fn variant(&self) -> IndexVariant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<u16>] {
        &self.points
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    /// The k nearest stored records, sorted by (distance, record index).
    /// k larger than the index size returns every record.
    pub fn k_nearest(&self, query: &[u16], k: usize) -> Vec<(u32, usize)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        match self.variant {
            IndexVariant::LinearScan => self.scan_nearest(query, k, |_| true),
            IndexVariant::BallTree => {
                let mut best: BinaryHeap<(u32, usize)> = BinaryHeap::with_capacity(k + 1);
                self.search(0, query, k, &mut best);
                let mut out = best.into_vec();
                out.sort_unstable();
                out
            }
        }
    }

    /// Linear scan restricted to records accepted by `filter`; the
    /// filtered neighbor search behind a composable predicate.
    pub fn k_nearest_filtered(
        &self,
        query: &[u16],
        k: usize,
        filter: impl Fn(usize) -> bool,
    ) -> Vec<(u32, usize)> {
        self.scan_nearest(query, k, filter)
    }

    fn scan_nearest(
        &self,
        query: &[u16],
        k: usize,
        filter: impl Fn(usize) -> bool,
    ) -> Vec<(u32, usize)> {
        let mut all: Vec<(u32, usize)> = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| filter(*i))
            .map(|(i, p)| (overlap_distance(query, p), i))
            .collect();
        all.sort_unstable();
        all.truncate(k);
        all
    }

    fn search(&self, node: usize, query: &[u16], k: usize, best: &mut BinaryHeap<(u32, usize)>) {
        let (center, radius) = match &self.nodes[node] {
            BallNode::Leaf { center, radius, .. } | BallNode::Internal { center, radius, .. } => {
                (*center, *radius)
            }
        };
        let center_dist = overlap_distance(query, &self.points[center]);
        let lower_bound = center_dist.saturating_sub(radius);
        if best.len() == k {
            let &(worst, _) = best.peek().unwrap();
            // equality must descend: an equidistant point with a smaller
            // record index still displaces the current k-th neighbor
            if lower_bound > worst {
                return;
            }
        }
        match &self.nodes[node] {
            BallNode::Leaf { lo, hi, .. } => {
                for &i in &self.order[*lo..*hi] {
                    let d = overlap_distance(query, &self.points[i]);
                    if best.len() < k {
                        best.push((d, i));
                    } else if (d, i) < *best.peek().unwrap() {
                        best.push((d, i));
                        best.pop();
                    }
                }
            }
            BallNode::Internal { left, right, .. } => {
                let bound = |child: usize| match &self.nodes[child] {
                    BallNode::Leaf { center, radius, .. }
                    | BallNode::Internal { center, radius, .. } => {
                        overlap_distance(query, &self.points[*center]).saturating_sub(*radius)
                    }
                };
                let (first, second) = if bound(*left) <= bound(*right) {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(first, query, k, best);
                self.search(second, query, k, best);
            }
        }
    }

    /// Label frequencies among the k nearest neighbors.
    pub fn predict(&self, query: &[u16], k: usize) -> ClassProbabilities {
        let mut counts = [0usize; 3];
        for (_, i) in self.k_nearest(query, k) {
            counts[self.labels[i].index()] += 1;
        }
        ClassProbabilities::from_counts(counts)
    }
}

fn build_subtree(
    points: &[Vec<u16>],
    order: &mut [usize],
    nodes: &mut Vec<BallNode>,
    lo: usize,
    hi: usize,
) -> usize {
    let slice = &order[lo..hi];
    let center = slice[0];
    let radius = slice
        .iter()
        .map(|&i| overlap_distance(&points[center], &points[i]))
        .max()
        .unwrap_or(0);

    let index = nodes.len();
    if hi - lo <= LEAF_SIZE {
        nodes.push(BallNode::Leaf {
            center,
            radius,
            lo,
            hi,
        });
        return index;
    }

    // anchor: a point farthest from the center (ties resolve by slice
    // position, which is deterministic); ordering by distance to the
    // anchor and splitting at the median keeps the tree balanced even
    // with heavily tied integer distances
    let anchor = *slice
        .iter()
        .max_by_key(|&&i| overlap_distance(&points[center], &points[i]))
        .unwrap();
    let segment = &mut order[lo..hi];
    segment.sort_unstable_by_key(|&i| (overlap_distance(&points[anchor], &points[i]), i));
    let mid = lo + (hi - lo) / 2;

    nodes.push(BallNode::Internal {
        center,
        radius,
        left: 0,
        right: 0,
    });
    let left = build_subtree(points, order, nodes, lo, mid);
    let right = build_subtree(points, order, nodes, mid, hi);
    match &mut nodes[index] {
        BallNode::Internal {
            left: l, right: r, ..
        } => {
            *l = left;
            *r = right;
        }
        BallNode::Leaf { .. } => unreachable!(),
    }
    index
}

/// A fitted lazy classifier: a neighbor index plus its k.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub index: NeighborIndex,
}

impl KnnModel {
    pub fn fit(dataset: &Dataset, variant: IndexVariant, k: usize) -> Result<KnnModel, ClassifierError> {
        if k == 0 {
            return Err(ClassifierError::InvalidHyperparameter(
                "k must be >= 1".into(),
            ));
        }
        Ok(KnnModel {
            k,
            index: NeighborIndex::build(dataset, variant)?,
        })
    }

    pub fn predict(&self, query: &[u16]) -> ClassProbabilities {
        self.index.predict(query, self.k)
    }
}
