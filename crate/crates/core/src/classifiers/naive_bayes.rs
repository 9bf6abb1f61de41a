//! Naive Bayes over categorical codes: class priors, per-attribute
//! conditional tables with Laplace smoothing, log-space posteriors.

use crate::dataset::{ClassLabel, Dataset};

use super::{ClassProbabilities, ClassifierError};

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub alpha: f64,
    pub(crate) priors: [f64; 3],
    /// cond[attribute][class][code] = P(code | class), smoothed.
    pub(crate) cond: Vec<[Vec<f64>; 3]>,
}

/// Priors are raw class frequencies; each conditional entry is
/// (count + alpha) / (class_count + alpha * m) for an attribute with m
/// codes. With alpha = 0 the entries are the raw empirical frequencies.
pub fn train_naive_bayes(dataset: &Dataset, alpha: f64) -> Result<NaiveBayesModel, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if !(alpha >= 0.0) {
        return Err(ClassifierError::InvalidHyperparameter(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let n = dataset.len() as f64;
    let class_counts = dataset.class_counts();
    let priors = class_counts.map(|c| c as f64 / n);

    let mut cond = Vec::with_capacity(dataset.schema().n_features());
    for (slot, attr) in dataset.schema().features().enumerate() {
        let m = attr.n_codes();
        let mut tables: [Vec<f64>; 3] = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        for record in dataset.records() {
            tables[record.label.index()][record.codes[slot] as usize] += 1.0;
        }
        for (k, table) in tables.iter_mut().enumerate() {
            let denom = class_counts[k] as f64 + alpha * m as f64;
            for entry in table.iter_mut() {
                *entry = if denom > 0.0 {
                    (*entry + alpha) / denom
                } else {
                    0.0
                };
            }
        }
        cond.push(tables);
    }
    Ok(NaiveBayesModel {
        alpha,
        priors,
        cond,
    })
}

impl NaiveBayesModel {
    pub fn priors(&self) -> [f64; 3] {
        self.priors
    }

    pub fn conditional(&self, attribute: usize, label: ClassLabel, code: u16) -> f64 {
        self.cond[attribute][label.index()][code as usize]
    }

    /// Unnormalized log posteriors: log prior plus the summed log
    /// conditionals. Exposed so the pre-normalization scores can be
    /// inspected; zero-probability terms contribute -inf.
    pub fn log_scores(&self, codes: &[u16]) -> [f64; 3] {
        assert_eq!(codes.len(), self.cond.len(), "record arity mismatch");
        let mut scores = self.priors.map(f64::ln);
        for (attribute, tables) in self.cond.iter().enumerate() {
            let code = codes[attribute] as usize;
            for (k, table) in tables.iter().enumerate() {
                scores[k] += table[code].ln();
            }
        }
        scores
    }

    /// Posterior renormalized over the class set; computed in log space
    /// and exponentiated around the maximum to avoid underflow.
    pub fn posterior(&self, codes: &[u16]) -> ClassProbabilities {
        let scores = self.log_scores(codes);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return ClassProbabilities::uniform();
        }
        ClassProbabilities::from_scores(scores.map(|s| (s - max).exp()))
    }
}
