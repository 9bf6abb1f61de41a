//! Per-class metric suite over confusion matrices, threshold-free curve
//! areas, pooled cross-validation, and fixed-layout report rendering.

mod crossval;
mod curves;
mod report;

pub use crossval::{cross_validate, CrossValError, CrossValOutcome};
pub use curves::{prc_area, prc_auc, roc_area, roc_auc, ScoredPrediction};
pub use report::{
    load_report, render_csv, render_text, report_from_str, report_to_string, save_report,
    EvaluationReport, ReportError,
};

use thiserror::Error;

use crate::dataset::ClassLabel;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("labels and counts have mismatched shapes")]
    Shape,
    #[error("class has no positives (or no negatives): curve undefined")]
    DegenerateClass,
}

/// Row-is-truth confusion matrix over an ordered label list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<ConfusionMatrix, EvalError> {
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(EvalError::DuplicateLabel(a.clone()));
            }
        }
        if counts.len() != labels.len() || counts.iter().any(|row| row.len() != labels.len()) {
            return Err(EvalError::Shape);
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    /// Tallies (true, predicted) name pairs against an ordered label
    /// list; names outside the list are rejected.
    pub fn build(labels: Vec<String>, pairs: &[(&str, &str)]) -> Result<ConfusionMatrix, EvalError> {
        let index_of = |name: &str| -> Result<usize, EvalError> {
            labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| EvalError::UnknownLabel(name.to_string()))
        };
        let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
        for (truth, predicted) in pairs {
            counts[index_of(truth)?][index_of(predicted)?] += 1;
        }
        ConfusionMatrix::new(labels, counts)
    }

    /// Tally over the closed three-label set.
    pub fn from_label_pairs(pairs: &[(ClassLabel, ClassLabel)]) -> ConfusionMatrix {
        let labels = ClassLabel::ALL.map(|l| l.name().to_string()).to_vec();
        let mut counts = vec![vec![0u64; 3]; 3];
        for (truth, predicted) in pairs {
            counts[truth.index()][predicted.index()] += 1;
        }
        ConfusionMatrix { labels, counts }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Row sum: how many evaluated records truly belong to class `i`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: u64 = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        trace as f64 / total as f64
    }
}

/// One-vs-rest threshold metrics for a class, plus the curve areas when
/// they are defined. `degenerate` flags any 0/0 cell forced to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: Option<f64>,
    pub prc_area: Option<f64>,
    pub degenerate: bool,
}

impl ClassMetrics {
    pub fn zeroed() -> ClassMetrics {
        ClassMetrics {
            tp_rate: 0.0,
            fp_rate: 0.0,
            precision: 0.0,
            recall: 0.0,
            f_measure: 0.0,
            mcc: 0.0,
            roc_area: None,
            prc_area: None,
            degenerate: true,
        }
    }
}

/// One-vs-rest reduction of the confusion matrix: TP is the diagonal
/// cell, FN the rest of the row, FP the rest of the column, TN the
/// remainder. 0/0 ratios are defined as 0 and flagged. Curve areas are
/// left unset; they require scores, not counts.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<Vec<ClassMetrics>, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let n = cm.labels.len();
    let total = cm.total();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let tp = cm.counts[c][c];
        let fn_ = cm.support(c) - tp;
        let fp: u64 = (0..n).filter(|&i| i != c).map(|i| cm.counts[i][c]).sum();
        let tn = total - tp - fn_ - fp;
        out.push(binary_metrics(tp, fp, fn_, tn));
    }
    Ok(out)
}

/// Textbook binary definitions with the 0/0 -> 0 convention.
pub fn binary_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> ClassMetrics {
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| -> f64 {
        if den == 0.0 {
            degenerate = true;
            0.0
        } else {
            num / den
        }
    };
    let (tp_f, fp_f, fn_f, tn_f) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let tp_rate = ratio(tp_f, tp_f + fn_f);
    let fp_rate = ratio(fp_f, fp_f + tn_f);
    let precision = ratio(tp_f, tp_f + fp_f);
    let recall = tp_rate;
    let f_measure = ratio(2.0 * precision * recall, precision + recall);
    let mcc_den = ((tp_f + fp_f) * (tp_f + fn_f) * (tn_f + fp_f) * (tn_f + fn_f)).sqrt();
    let mcc = ratio(tp_f * tn_f - fp_f * fn_f, mcc_den);
    ClassMetrics {
        tp_rate,
        fp_rate,
        precision,
        recall,
        f_measure,
        mcc,
        roc_area: None,
        prc_area: None,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_make_a_diagonal_matrix() {
        let pairs: Vec<(ClassLabel, ClassLabel)> = ClassLabel::ALL
            .into_iter()
            .flat_map(|l| std::iter::repeat((l, l)).take(4))
            .collect();
        let cm = ConfusionMatrix::from_label_pairs(&pairs);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cm.counts()[i][j], if i == j { 4 } else { 0 });
            }
        }
        assert_eq!(cm.accuracy(), 1.0);
        for m in per_class_metrics(&cm).unwrap() {
            assert_eq!(m.precision, 1.0);
            assert_eq!(m.recall, 1.0);
            assert_eq!(m.f_measure, 1.0);
            assert_eq!(m.mcc, 1.0);
            assert_eq!(m.fp_rate, 0.0);
            assert!(!m.degenerate);
        }
    }

    #[test]
    fn empty_pair_list_gives_an_all_zero_matrix() {
        let cm = ConfusionMatrix::from_label_pairs(&[]);
        assert_eq!(cm.total(), 0);
        assert!(cm.counts().iter().flatten().all(|&c| c == 0));
        assert_eq!(per_class_metrics(&cm).unwrap_err(), EvalError::EmptyMatrix);
    }

    #[test]
    fn random_pairs_match_an_exhaustive_tally() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(31, "confusion-test", 0);
        let pairs: Vec<(ClassLabel, ClassLabel)> = (0..10)
            .map(|_| {
                (
                    ClassLabel::from_index(rng.gen_range(0..3)).unwrap(),
                    ClassLabel::from_index(rng.gen_range(0..3)).unwrap(),
                )
            })
            .collect();
        let cm = ConfusionMatrix::from_label_pairs(&pairs);
        for (i, truth) in ClassLabel::ALL.into_iter().enumerate() {
            for (j, predicted) in ClassLabel::ALL.into_iter().enumerate() {
                let oracle = pairs
                    .iter()
                    .filter(|(t, p)| *t == truth && *p == predicted)
                    .count() as u64;
                assert_eq!(cm.counts()[i][j], oracle);
            }
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let err = ConfusionMatrix::build(
            vec!["a".into(), "b".into()],
            &[("a", "a"), ("a", "zzz")],
        )
        .unwrap_err();
        assert_eq!(err, EvalError::UnknownLabel("zzz".into()));
    }

    #[test]
    fn hand_worked_binary_matrix() {
        // TP=2, FP=1, FN=1, TN=2: precision = recall = 2/3, MCC = 1/3
        let m = binary_metrics(2, 1, 1, 2);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.mcc - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.tp_rate, m.recall);
        assert!(!m.degenerate);
    }

    #[test]
    fn absent_class_row_is_all_zero_and_flagged() {
        // Anonymous never true and never predicted
        let pairs = [
            (ClassLabel::Claimed, ClassLabel::Claimed),
            (ClassLabel::NotClaimed, ClassLabel::Claimed),
        ];
        let cm = ConfusionMatrix::from_label_pairs(&pairs);
        let rows = per_class_metrics(&cm).unwrap();
        let anon = rows[ClassLabel::Anonymous.index()];
        assert_eq!(anon.tp_rate, 0.0);
        assert_eq!(anon.precision, 0.0);
        assert_eq!(anon.f_measure, 0.0);
        assert_eq!(anon.mcc, 0.0);
        assert!(anon.degenerate);
    }

    #[test]
    fn recall_is_tp_rate_and_weighted_tp_rate_recovers_accuracy() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(77, "metrics-test", 0);
        let pairs: Vec<(ClassLabel, ClassLabel)> = (0..200)
            .map(|_| {
                (
                    ClassLabel::from_index(rng.gen_range(0..3)).unwrap(),
                    ClassLabel::from_index(rng.gen_range(0..3)).unwrap(),
                )
            })
            .collect();
        let cm = ConfusionMatrix::from_label_pairs(&pairs);
        let rows = per_class_metrics(&cm).unwrap();
        let mut weighted_tp_rate = 0.0;
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.recall, row.tp_rate);
            weighted_tp_rate += cm.support(i) as f64 * row.tp_rate;
        }
        assert!((weighted_tp_rate / cm.total() as f64 - cm.accuracy()).abs() < 1e-12);
    }

    #[test]
    fn two_class_reduction_equals_direct_binary_computation() {
        let cm = ConfusionMatrix::new(
            vec!["pos".into(), "neg".into()],
            vec![vec![7, 3], vec![2, 8]],
        )
        .unwrap();
        let rows = per_class_metrics(&cm).unwrap();
        let direct = binary_metrics(7, 2, 3, 8);
        assert_eq!(rows[0], direct);
    }
}
