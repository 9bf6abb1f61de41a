//! Pooled k-fold cross-validation: every record is scored exactly once
//! by a model that never saw it, and one report is computed from the
//! pooled predictions.

use thiserror::Error;

use crate::classifiers::{train, ClassifierConfig, ClassifierError};
use crate::dataset::{stratified_kfold, Dataset, FoldError};
use crate::rng::stream_seed;

use super::report::EvaluationReport;
use super::{EvalError, ScoredPrediction};

#[derive(Debug, Error)]
pub enum CrossValError {
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Train(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug)]
pub struct CrossValOutcome {
    /// Held-out predictions pooled in fold order.
    pub scored: Vec<ScoredPrediction>,
    pub report: EvaluationReport,
}

pub fn cross_validate(
    config: &ClassifierConfig,
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<CrossValOutcome, CrossValError> {
    let plan = stratified_kfold(dataset, k, seed)?;
    let mut scored = Vec::with_capacity(dataset.len());
    for fold in 0..plan.k {
        let train_set = dataset.subset(&plan.train_indices(fold));
        let model = train(config, &train_set, stream_seed(seed, "cv-fold", fold as u64))?;
        for &index in &plan.folds[fold] {
            let record = &dataset.records()[index];
            scored.push(ScoredPrediction {
                true_label: record.label,
                scores: model.predict(&record.codes),
            });
        }
    }
    let report = EvaluationReport::from_scored(&scored)?;
    Ok(CrossValOutcome { scored, report })
}
