//! Threshold-sweep curve areas: ROC via the rank statistic with ties
//! counted one half, precision-recall via trapezoids between the
//! recall-advancing operating points.

use crate::classifiers::ClassProbabilities;
use crate::dataset::ClassLabel;

use super::EvalError;

/// A true label with the score vector a classifier assigned it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPrediction {
    pub true_label: ClassLabel,
    pub scores: ClassProbabilities,
}

/// ROC area for (score, is_positive) items: the Mann-Whitney statistic,
/// tied scores contributing one half.
pub fn roc_auc(items: &[(f64, bool)]) -> Result<f64, EvalError> {
    let positives = items.iter().filter(|(_, pos)| *pos).count();
    let negatives = items.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateClass);
    }

    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));

    // average 1-based ranks within each tie group
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &sorted[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Precision-recall area for (score, is_positive) items. Sweeping in
/// descending score order, tied scores form one operating point; points
/// are taken where recall advances, the curve is anchored at recall 0
/// with the first point's precision, and trapezoids connect the points
/// up to full recall.
pub fn prc_auc(items: &[(f64, bool)]) -> Result<f64, EvalError> {
    let positives = items.iter().filter(|(_, pos)| *pos).count();
    if positives == 0 {
        return Err(EvalError::DegenerateClass);
    }
    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores must not be NaN"));

    let p_total = positives as f64;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut area = 0.0f64;
    let mut prev: Option<(f64, f64)> = None; // (recall, precision)
    let mut i = 0usize;
    while i < sorted.len() {
        let mut j = i;
        let mut group_tp = 0u64;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                group_tp += 1;
            }
            j += 1;
        }
        let group_fp = (j - i) as u64 - group_tp;
        tp += group_tp;
        fp += group_fp;
        if group_tp > 0 {
            let recall = tp as f64 / p_total;
            let precision = tp as f64 / (tp + fp) as f64;
            let (prev_recall, prev_precision) = prev.unwrap_or((0.0, precision));
            area += (recall - prev_recall) * (precision + prev_precision) / 2.0;
            prev = Some((recall, precision));
        }
        i = j;
    }
    Ok(area)
}

fn one_vs_rest_items(scored: &[ScoredPrediction], label: ClassLabel) -> Vec<(f64, bool)> {
    scored
        .iter()
        .map(|s| (s.scores.get(label), s.true_label == label))
        .collect()
}

/// One-vs-rest ROC area for `label` over scored predictions.
pub fn roc_area(scored: &[ScoredPrediction], label: ClassLabel) -> Result<f64, EvalError> {
    roc_auc(&one_vs_rest_items(scored, label))
}

/// One-vs-rest precision-recall area for `label`.
pub fn prc_area(scored: &[ScoredPrediction], label: ClassLabel) -> Result<f64, EvalError> {
    prc_auc(&one_vs_rest_items(scored, label))
}
