//! Random forest: seeded bootstrap samples, per-split attribute
//! subsampling, prediction by averaging tree distributions. Each tree
//! draws from its own (seed, tree-index) stream, so training order
//! cannot change the forest.

use rand::Rng;

use crate::dataset::Dataset;
use crate::rng::stream_rng;

use super::tree::{grow, DecisionTree};
use super::{ClassProbabilities, ClassifierError};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Attributes sampled per split; defaults to floor(sqrt(features)).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> ForestConfig {
        ForestConfig {
            n_trees: 25,
            mtry: None,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub config: ForestConfig,
    pub seed: u64,
    pub(crate) trees: Vec<DecisionTree>,
}

pub fn train_random_forest(
    dataset: &Dataset,
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForest, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if config.n_trees == 0 {
        return Err(ClassifierError::InvalidHyperparameter(
            "n_trees must be >= 1".into(),
        ));
    }
    let n_features = dataset.schema().n_features();
    let mtry = config
        .mtry
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features);

    let n = dataset.len();
    let remaining: Vec<usize> = (0..n_features).collect();
    let mut trees = Vec::with_capacity(config.n_trees);
    for tree_index in 0..config.n_trees {
        let mut rng = stream_rng(seed, "forest-tree", tree_index as u64);
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut nodes = Vec::new();
        let mut sampler = Some((&mut rng, mtry));
        grow(
            dataset,
            &rows,
            &remaining,
            config.min_leaf,
            &mut sampler,
            &mut nodes,
        );
        trees.push(DecisionTree {
            nodes,
            min_leaf: config.min_leaf,
            n_features,
        });
    }
    Ok(RandomForest {
        config: config.clone(),
        seed,
        trees,
    })
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean of the per-tree distributions.
    pub fn predict(&self, codes: &[u16]) -> ClassProbabilities {
        let mut sums = [0.0f64; 3];
        for tree in &self.trees {
            let p = tree.predict(codes).as_array();
            for (acc, v) in sums.iter_mut().zip(p) {
                *acc += v;
            }
        }
        ClassProbabilities::from_scores(sums)
    }
}
