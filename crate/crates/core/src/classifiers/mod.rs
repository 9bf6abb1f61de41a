//! The classifier roster behind one train/predict contract. Every
//! family returns a probability distribution over the closed class set.

mod forest;
mod knn;
mod kstar;
mod mlp;
mod naive_bayes;
mod ovr;
pub mod persist;
mod tree;

pub use forest::{train_random_forest, ForestConfig, RandomForest};
pub use knn::{IndexVariant, KnnModel, NeighborIndex};
pub use kstar::{train_kstar, KStarConfig, KStarModel};
pub use mlp::{error_energy, one_hot_target, train_mlp, Gradients, MlpConfig, MlpModel, MlpTraining};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use ovr::{train_one_vs_rest, OneVsRestModel, OvrConfig};
pub use tree::{entropy, information_gain, train_decision_tree, DecisionTree};

use thiserror::Error;

use crate::dataset::{ClassLabel, Dataset};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty class counts")]
    EmptyCounts,
    #[error("empty neighbor index")]
    EmptyIndex,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("input width {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

/// Probability distribution over the three class labels; entries sum to
/// one (uniform when every unnormalized score vanishes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities {
    probs: [f64; 3],
}

impl ClassProbabilities {
    pub fn uniform() -> ClassProbabilities {
        ClassProbabilities {
            probs: [1.0 / 3.0; 3],
        }
    }

    /// Normalizes non-negative scores; an all-zero vector yields the
    /// uniform distribution.
    pub fn from_scores(scores: [f64; 3]) -> ClassProbabilities {
        debug_assert!(scores.iter().all(|s| *s >= 0.0 && s.is_finite()));
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return ClassProbabilities::uniform();
        }
        ClassProbabilities {
            probs: [scores[0] / total, scores[1] / total, scores[2] / total],
        }
    }

    pub fn from_counts(counts: [usize; 3]) -> ClassProbabilities {
        ClassProbabilities::from_scores(counts.map(|c| c as f64))
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.probs[label.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.probs
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Most probable label; ties resolve to the lowest label index.
    pub fn argmax(&self) -> ClassLabel {
        let mut best = 0usize;
        for i in 1..3 {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        ClassLabel::from_index(best).unwrap()
    }
}

/// Training configuration for any classifier family.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierConfig {
    NaiveBayes { alpha: f64 },
    DecisionTree { min_leaf: usize },
    RandomForest(ForestConfig),
    KnnLinear { k: usize },
    KnnBallTree { k: usize },
    KStar(KStarConfig),
    Mlp(MlpConfig),
    OneVsRest(OvrConfig),
}

impl ClassifierConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ClassifierConfig::NaiveBayes { .. } => "nb",
            ClassifierConfig::DecisionTree { .. } => "tree",
            ClassifierConfig::RandomForest(_) => "forest",
            ClassifierConfig::KnnLinear { .. } => "ibk-linear",
            ClassifierConfig::KnnBallTree { .. } => "ibk-ball",
            ClassifierConfig::KStar(_) => "kstar",
            ClassifierConfig::Mlp(_) => "mlp",
            ClassifierConfig::OneVsRest(_) => "ovr",
        }
    }
}

/// A trained model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    KnnLinear(KnnModel),
    KnnBallTree(KnnModel),
    KStar(KStarModel),
    Mlp(MlpModel),
    OneVsRest(OneVsRestModel),
}

impl ClassifierModel {
    pub fn family(&self) -> &'static str {
        match self {
            ClassifierModel::NaiveBayes(_) => "nb",
            ClassifierModel::DecisionTree(_) => "tree",
            ClassifierModel::RandomForest(_) => "forest",
            ClassifierModel::KnnLinear(_) => "ibk-linear",
            ClassifierModel::KnnBallTree(_) => "ibk-ball",
            ClassifierModel::KStar(_) => "kstar",
            ClassifierModel::Mlp(_) => "mlp",
            ClassifierModel::OneVsRest(_) => "ovr",
        }
    }

    /// Class probabilities for one encoded record. The codes must come
    /// from the schema the model was trained on.
    pub fn predict(&self, codes: &[u16]) -> ClassProbabilities {
        match self {
            ClassifierModel::NaiveBayes(m) => m.posterior(codes),
            ClassifierModel::DecisionTree(m) => m.predict(codes),
            ClassifierModel::RandomForest(m) => m.predict(codes),
            ClassifierModel::KnnLinear(m) | ClassifierModel::KnnBallTree(m) => m.predict(codes),
            ClassifierModel::KStar(m) => m.predict(codes),
            ClassifierModel::Mlp(m) => m.predict(codes),
            ClassifierModel::OneVsRest(m) => m.predict(codes),
        }
    }
}

/// Trains the configured family on a dataset. All randomness derives
/// from `seed`; families without stochastic training ignore it.
pub fn train(
    config: &ClassifierConfig,
    dataset: &Dataset,
    seed: u64,
) -> Result<ClassifierModel, ClassifierError> {
    match config {
        ClassifierConfig::NaiveBayes { alpha } => {
            train_naive_bayes(dataset, *alpha).map(ClassifierModel::NaiveBayes)
        }
        ClassifierConfig::DecisionTree { min_leaf } => {
            train_decision_tree(dataset, *min_leaf).map(ClassifierModel::DecisionTree)
        }
        ClassifierConfig::RandomForest(config) => {
            train_random_forest(dataset, config, seed).map(ClassifierModel::RandomForest)
        }
        ClassifierConfig::KnnLinear { k } => {
            KnnModel::fit(dataset, IndexVariant::LinearScan, *k).map(ClassifierModel::KnnLinear)
        }
        ClassifierConfig::KnnBallTree { k } => {
            KnnModel::fit(dataset, IndexVariant::BallTree, *k).map(ClassifierModel::KnnBallTree)
        }
        ClassifierConfig::KStar(config) => {
            train_kstar(dataset, *config).map(ClassifierModel::KStar)
        }
        ClassifierConfig::Mlp(config) => {
            train_mlp(dataset, config, seed).map(|t| ClassifierModel::Mlp(t.model))
        }
        ClassifierConfig::OneVsRest(config) => {
            train_one_vs_rest(dataset, config).map(ClassifierModel::OneVsRest)
        }
    }
}
