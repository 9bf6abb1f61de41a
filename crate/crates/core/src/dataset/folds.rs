//! Stratified k-fold plans. Fold sizes differ by at most one record and
//! every fold's class count stays strictly within one record of its
//! proportional quota, which keeps per-class fold proportions within
//! 1/|fold| of the dataset proportions.

use rand::seq::SliceRandom;
use thiserror::Error;

use super::{ClassLabel, Dataset};
use crate::rng::stream_rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("need 2 <= k <= record count, got k={k} for {n} records")]
    TooFewRecords { k: usize, n: usize },
    #[error("class {label} has only {count} records, fewer than k={k}")]
    ClassTooSmall {
        label: ClassLabel,
        count: usize,
        k: usize,
    },
}

/// Disjoint index sets partitioning [0, N), one per fold, each sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Indices outside fold `i`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, FoldError> {
    let n = dataset.len();
    if k < 2 || k > n {
        return Err(FoldError::TooFewRecords { k, n });
    }
    let class_counts = dataset.class_counts();
    for label in ClassLabel::ALL {
        let count = class_counts[label.index()];
        if count > 0 && count < k {
            return Err(FoldError::ClassTooSmall { label, count, k });
        }
    }

    let cells = apportion(k, n, &class_counts);

    let mut rng = stream_rng(seed, "stratified-kfold", 0);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (c, label) in ClassLabel::ALL.into_iter().enumerate() {
        let mut members: Vec<usize> = dataset
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let mut cursor = 0usize;
        for (r, fold) in folds.iter_mut().enumerate() {
            let take = cells[r][c];
            fold.extend_from_slice(&members[cursor..cursor + take]);
            cursor += take;
        }
        debug_assert_eq!(cursor, members.len());
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed })
}

/// Fold-by-class record counts. Fold sizes are floor/ceil(N/k) (larger
/// folds first); each cell is the floor of its quota f_r * n_c / N, and
/// the leftover units are matched to cells with a nonzero fractional
/// quota via augmenting paths, so every cell stays strictly within one
/// record of its quota. A feasible assignment always exists because the
/// fractional parts themselves form one.
fn apportion(k: usize, n: usize, class_counts: &[usize; 3]) -> Vec<[usize; 3]> {
    let fold_sizes: Vec<usize> = (0..k)
        .map(|r| n / k + usize::from(r < n % k))
        .collect();

    // integer arithmetic throughout: quota numerator fold*count, base
    // floor(quota), cell eligible for an extra iff quota is fractional
    let numer = |r: usize, c: usize| fold_sizes[r] as u128 * class_counts[c] as u128;
    let total = n as u128;
    let base = |r: usize, c: usize| (numer(r, c) / total) as usize;
    let eligible = |r: usize, c: usize| numer(r, c) % total != 0;

    let mut cells: Vec<[usize; 3]> = (0..k)
        .map(|r| [base(r, 0), base(r, 1), base(r, 2)])
        .collect();
    let mut spare: Vec<usize> = (0..k)
        .map(|r| fold_sizes[r] - cells[r].iter().sum::<usize>())
        .collect();
    let deficits: Vec<usize> = (0..3)
        .map(|c| class_counts[c] - (0..k).map(|r| cells[r][c]).sum::<usize>())
        .collect();

    // fold preference per class: larger fractional quota first, then
    // lower fold index, for a deterministic search order
    let prefs: Vec<Vec<usize>> = (0..3)
        .map(|c| {
            let mut order: Vec<usize> = (0..k).filter(|&r| eligible(r, c)).collect();
            order.sort_by_key(|&r| (std::cmp::Reverse(numer(r, c) % total), r));
            order
        })
        .collect();

    let mut extra = vec![[false; 3]; k];
    for (c, &deficit) in deficits.iter().enumerate() {
        for _ in 0..deficit {
            let mut visited = vec![false; k];
            let placed = place_extra(c, &prefs, &mut extra, &mut spare, &mut visited);
            assert!(placed, "quota extras always admit a feasible matching");
        }
    }
    for (r, row) in extra.iter().enumerate() {
        for c in 0..3 {
            if row[c] {
                cells[r][c] += 1;
            }
        }
    }
    cells
}

fn place_extra(
    c: usize,
    prefs: &[Vec<usize>],
    extra: &mut Vec<[bool; 3]>,
    spare: &mut [usize],
    visited: &mut [bool],
) -> bool {
    for &r in &prefs[c] {
        if visited[r] || extra[r][c] {
            continue;
        }
        visited[r] = true;
        if spare[r] > 0 {
            spare[r] -= 1;
            extra[r][c] = true;
            return true;
        }
        // fold is full: try to reroute another class's extra elsewhere
        for c2 in 0..3 {
            if c2 == c || !extra[r][c2] {
                continue;
            }
            extra[r][c2] = false;
            if place_extra(c2, prefs, extra, spare, visited) {
                extra[r][c] = true;
                return true;
            }
            extra[r][c2] = true;
        }
    }
    false
}
