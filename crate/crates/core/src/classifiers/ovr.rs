//! One-vs-rest meta-classifier over L2-regularized logistic scorers on
//! one-hot inputs, trained by deterministic full-batch gradient descent
//! from a zero initialization.

use crate::dataset::{ClassLabel, Dataset};

use super::{ClassProbabilities, ClassifierError};

#[derive(Debug, Clone, PartialEq)]
pub struct OvrConfig {
    pub eta: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for OvrConfig {
    fn default() -> OvrConfig {
        OvrConfig {
            eta: 0.5,
            epochs: 200,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearScorer {
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: f64,
}

impl LinearScorer {
    fn score(&self, input: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        1.0 / (1.0 + (-z).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRestModel {
    pub config: OvrConfig,
    pub(crate) attr_sizes: Vec<usize>,
    pub(crate) scorers: Vec<LinearScorer>,
    /// Set when training saw a single class; the model then predicts
    /// that class with certainty.
    pub single_class: Option<ClassLabel>,
}

pub fn train_one_vs_rest(
    dataset: &Dataset,
    config: &OvrConfig,
) -> Result<OneVsRestModel, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if !(config.eta > 0.0) || config.epochs == 0 || config.l2 < 0.0 {
        return Err(ClassifierError::InvalidHyperparameter(
            "need eta > 0, epochs >= 1, l2 >= 0".into(),
        ));
    }
    let attr_sizes = dataset.schema().feature_sizes();
    let counts = dataset.class_counts();
    let present: Vec<ClassLabel> = ClassLabel::ALL
        .into_iter()
        .filter(|l| counts[l.index()] > 0)
        .collect();
    if present.len() == 1 {
        // degenerate: constant predictor, flagged via single_class
        return Ok(OneVsRestModel {
            config: config.clone(),
            attr_sizes,
            scorers: Vec::new(),
            single_class: Some(present[0]),
        });
    }

    let width: usize = attr_sizes.iter().sum();
    let inputs: Vec<Vec<f64>> = dataset
        .records()
        .iter()
        .map(|r| one_hot(&attr_sizes, &r.codes))
        .collect();
    let n = inputs.len() as f64;

    let mut scorers = Vec::with_capacity(3);
    for label in ClassLabel::ALL {
        let targets: Vec<f64> = dataset
            .records()
            .iter()
            .map(|r| if r.label == label { 1.0 } else { 0.0 })
            .collect();
        let mut scorer = LinearScorer {
            weights: vec![0.0; width],
            bias: 0.0,
        };
        let mut grad_w = vec![0.0; width];
        for _ in 0..config.epochs {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (input, target) in inputs.iter().zip(&targets) {
                let residual = scorer.score(input) - target;
                for (g, x) in grad_w.iter_mut().zip(input) {
                    *g += residual * x;
                }
                grad_b += residual;
            }
            for (w, g) in scorer.weights.iter_mut().zip(&grad_w) {
                *w -= config.eta * (g / n + config.l2 * *w);
            }
            scorer.bias -= config.eta * grad_b / n;
        }
        scorers.push(scorer);
    }
    Ok(OneVsRestModel {
        config: config.clone(),
        attr_sizes,
        scorers,
        single_class: None,
    })
}

fn one_hot(attr_sizes: &[usize], codes: &[u16]) -> Vec<f64> {
    let width: usize = attr_sizes.iter().sum();
    let mut input = vec![0.0; width];
    let mut offset = 0usize;
    for (&code, &size) in codes.iter().zip(attr_sizes) {
        input[offset + code as usize] = 1.0;
        offset += size;
    }
    input
}

impl OneVsRestModel {
    /// Raw per-class sigmoid scores before renormalization.
    pub fn class_scores(&self, codes: &[u16]) -> [f64; 3] {
        assert_eq!(codes.len(), self.attr_sizes.len(), "record arity mismatch");
        if let Some(label) = self.single_class {
            let mut scores = [0.0; 3];
            scores[label.index()] = 1.0;
            return scores;
        }
        let input = one_hot(&self.attr_sizes, codes);
        [
            self.scorers[0].score(&input),
            self.scorers[1].score(&input),
            self.scorers[2].score(&input),
        ]
    }

    pub fn predict(&self, codes: &[u16]) -> ClassProbabilities {
        ClassProbabilities::from_scores(self.class_scores(codes))
    }
}
