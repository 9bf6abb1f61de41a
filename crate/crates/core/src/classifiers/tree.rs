//! Decision tree induction on categorical codes: entropy-based splits,
//! one child per attribute code, attributes never reused on a path.

use crate::dataset::Dataset;
use crate::rng::SeededRng;

use super::{ClassProbabilities, ClassifierError};

/// Shannon entropy of a count vector, in bits, with 0·log 0 = 0.
pub fn entropy(counts: &[usize]) -> Result<f64, ClassifierError> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(ClassifierError::EmptyCounts);
    }
    let total = total as f64;
    let mut h = 0.0;
    for &count in counts {
        if count > 0 {
            let p = count as f64 / total;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Parent entropy minus the size-weighted entropy of the child
/// partitions induced by `attribute`.
pub fn information_gain(dataset: &Dataset, rows: &[usize], attribute: usize) -> f64 {
    let n_codes = dataset.schema().feature(attribute).n_codes();
    gain_on(dataset, rows, attribute, n_codes)
}

fn label_counts(dataset: &Dataset, rows: &[usize]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for &row in rows {
        counts[dataset.records()[row].label.index()] += 1;
    }
    counts
}

fn entropy_of(counts: &[usize; 3]) -> f64 {
    entropy(counts).unwrap_or(0.0)
}

fn gain_on(dataset: &Dataset, rows: &[usize], attribute: usize, n_codes: usize) -> f64 {
    let parent = entropy_of(&label_counts(dataset, rows));
    let mut child_counts = vec![[0usize; 3]; n_codes];
    for &row in rows {
        let record = &dataset.records()[row];
        child_counts[record.codes[attribute] as usize][record.label.index()] += 1;
    }
    let total = rows.len() as f64;
    let mut weighted = 0.0;
    for counts in &child_counts {
        let size: usize = counts.iter().sum();
        if size > 0 {
            weighted += (size as f64 / total) * entropy_of(counts);
        }
    }
    (parent - weighted).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TreeNode {
    Leaf {
        counts: [usize; 3],
    },
    Split {
        attribute: usize,
        /// Label counts of the rows that reached this node; records that
        /// present a code with no child fall back to this distribution.
        counts: [usize; 3],
        children: Vec<Option<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<TreeNode>,
    pub min_leaf: usize,
    pub(crate) n_features: usize,
}

/// Grows the tree with greedy maximum-gain splits. A node becomes a leaf
/// when it is pure, holds fewer than `min_leaf` rows, or no remaining
/// attribute splits its rows into two or more groups; gain ties resolve
/// to the lowest attribute index.
pub fn train_decision_tree(
    dataset: &Dataset,
    min_leaf: usize,
) -> Result<DecisionTree, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let remaining: Vec<usize> = (0..dataset.schema().n_features()).collect();
    let mut nodes = Vec::new();
    grow(dataset, &rows, &remaining, min_leaf, &mut None, &mut nodes);
    Ok(DecisionTree {
        nodes,
        min_leaf,
        n_features: dataset.schema().n_features(),
    })
}

/// Node growth shared with the random forest; `sampler` restricts each
/// split to `mtry` attributes drawn from the remaining set.
pub(crate) fn grow(
    dataset: &Dataset,
    rows: &[usize],
    remaining: &[usize],
    min_leaf: usize,
    sampler: &mut Option<(&mut SeededRng, usize)>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let counts = label_counts(dataset, rows);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || rows.len() < min_leaf || remaining.is_empty() {
        nodes.push(TreeNode::Leaf { counts });
        return nodes.len() - 1;
    }

    let candidates = candidate_attributes(dataset, rows, remaining, sampler);
    let Some(best) = best_split(dataset, rows, &candidates) else {
        nodes.push(TreeNode::Leaf { counts });
        return nodes.len() - 1;
    };

    let n_codes = dataset.schema().feature(best).n_codes();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_codes];
    for &row in rows {
        buckets[dataset.records()[row].codes[best] as usize].push(row);
    }
    let next_remaining: Vec<usize> = remaining.iter().copied().filter(|&a| a != best).collect();

    let index = nodes.len();
    nodes.push(TreeNode::Split {
        attribute: best,
        counts,
        children: vec![None; n_codes],
    });
    for (code, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        let child = grow(dataset, bucket, &next_remaining, min_leaf, sampler, nodes);
        match &mut nodes[index] {
            TreeNode::Split { children, .. } => children[code] = Some(child),
            TreeNode::Leaf { .. } => unreachable!(),
        }
    }
    index
}

/// Attributes worth evaluating at this node: drawn from the remaining
/// set (optionally subsampled to `mtry`), keeping only those that
/// actually partition the rows. When a subsample has no splitting
/// attribute the full remaining set is reconsidered, so trees do not get
/// stunted by an unlucky draw.
fn candidate_attributes(
    dataset: &Dataset,
    rows: &[usize],
    remaining: &[usize],
    sampler: &mut Option<(&mut SeededRng, usize)>,
) -> Vec<usize> {
    let splits = |attrs: &[usize]| -> Vec<usize> {
        attrs
            .iter()
            .copied()
            .filter(|&a| partitions(dataset, rows, a))
            .collect()
    };
    if let Some((rng, mtry)) = sampler {
        if *mtry < remaining.len() {
            let sampled = sample_without_replacement(rng, remaining, *mtry);
            let usable = splits(&sampled);
            if !usable.is_empty() {
                return usable;
            }
        }
    }
    splits(remaining)
}

fn partitions(dataset: &Dataset, rows: &[usize], attribute: usize) -> bool {
    let first = dataset.records()[rows[0]].codes[attribute];
    rows.iter()
        .any(|&row| dataset.records()[row].codes[attribute] != first)
}

fn best_split(dataset: &Dataset, rows: &[usize], candidates: &[usize]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &attribute in candidates {
        let n_codes = dataset.schema().feature(attribute).n_codes();
        let gain = gain_on(dataset, rows, attribute, n_codes);
        let better = match best {
            None => true,
            Some((best_gain, best_attr)) => {
                gain > best_gain || (gain == best_gain && attribute < best_attr)
            }
        };
        if better {
            best = Some((gain, attribute));
        }
    }
    best.map(|(_, attribute)| attribute)
}

/// Sorted draw of `count` distinct attributes; sorting keeps the gain
/// tie-break identical to the unsampled tree.
fn sample_without_replacement(rng: &mut SeededRng, pool: &[usize], count: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut pool: Vec<usize> = pool.to_vec();
    pool.shuffle(rng);
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

impl DecisionTree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Walks to a leaf and returns its normalized label distribution; a
    /// code with no child at an internal node returns that node's own
    /// training distribution.
    pub fn predict(&self, codes: &[u16]) -> ClassProbabilities {
        assert_eq!(codes.len(), self.n_features, "record arity mismatch");
        let mut index = 0usize;
        loop {
            match &self.nodes[index] {
                TreeNode::Leaf { counts } => return ClassProbabilities::from_counts(*counts),
                TreeNode::Split {
                    attribute,
                    counts,
                    children,
                } => match children.get(codes[*attribute] as usize).copied().flatten() {
                    Some(child) => index = child,
                    None => return ClassProbabilities::from_counts(*counts),
                },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn root_attribute(&self) -> Option<usize> {
        match self.nodes.first() {
            Some(TreeNode::Split { attribute, .. }) => Some(*attribute),
            _ => None,
        }
    }
}
