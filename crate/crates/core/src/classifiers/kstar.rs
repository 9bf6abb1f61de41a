//! Instance-based classifier whose similarity is a per-attribute
//! transformation probability rather than a geometric distance. With the
//! blend near zero it degenerates to nearest-neighbor behavior; at one
//! it spreads all mass away from the identity transformation.

use crate::dataset::{ClassLabel, Dataset};

use super::{ClassProbabilities, ClassifierError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KStarConfig {
    /// Per-attribute stay/move mixing parameter in (0, 1].
    pub blend: f64,
}

impl Default for KStarConfig {
    fn default() -> KStarConfig {
        KStarConfig { blend: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarModel {
    pub config: KStarConfig,
    pub(crate) attr_sizes: Vec<usize>,
    pub(crate) points: Vec<Vec<u16>>,
    pub(crate) labels: Vec<ClassLabel>,
}

pub fn train_kstar(dataset: &Dataset, config: KStarConfig) -> Result<KStarModel, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if !(config.blend > 0.0 && config.blend <= 1.0) {
        return Err(ClassifierError::InvalidHyperparameter(format!(
            "blend must lie in (0, 1], got {}",
            config.blend
        )));
    }
    Ok(KStarModel {
        config,
        attr_sizes: dataset.schema().feature_sizes(),
        points: dataset.records().iter().map(|r| r.codes.clone()).collect(),
        labels: dataset.records().iter().map(|r| r.label).collect(),
    })
}

impl KStarModel {
    /// Probability of transforming code `a` into code `b` within an
    /// attribute of `m` codes: (1 - s) on the identity, s spread evenly
    /// over the m - 1 alternatives. A single-code attribute always stays.
    fn transform_prob(&self, m: usize, a: u16, b: u16) -> f64 {
        let s = self.config.blend;
        if m <= 1 {
            1.0
        } else if a == b {
            1.0 - s
        } else {
            s / (m as f64 - 1.0)
        }
    }

    /// Transformation probability from `query` to one stored instance:
    /// the product of the per-attribute probabilities.
    pub fn instance_weight(&self, query: &[u16], instance: &[u16]) -> f64 {
        assert_eq!(query.len(), self.attr_sizes.len(), "record arity mismatch");
        self.attr_sizes
            .iter()
            .zip(query.iter().zip(instance))
            .map(|(&m, (&a, &b))| self.transform_prob(m, a, b))
            .product()
    }

    /// Class probability proportional to the summed transformation
    /// probabilities into each class's instances.
    pub fn predict(&self, query: &[u16]) -> ClassProbabilities {
        let mut scores = [0.0f64; 3];
        for (point, label) in self.points.iter().zip(&self.labels) {
            scores[label.index()] += self.instance_weight(query, point);
        }
        ClassProbabilities::from_scores(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::knn::{IndexVariant, NeighborIndex};
    use crate::dataset::testutil::toy_dataset;
    use crate::dataset::ClassLabel::{Anonymous, Claimed, NotClaimed};
    use rand::Rng;

    #[test]
    fn single_class_dataset_is_certain() {
        let ds = toy_dataset(
            2,
            3,
            &[(&[0, 1], Anonymous), (&[2, 2], Anonymous)],
        );
        let model = train_kstar(&ds, KStarConfig::default()).unwrap();
        let p = model.predict(&[1, 1]);
        assert_eq!(p.get(Anonymous), 1.0);
    }

    #[test]
    fn equidistant_instances_of_different_classes_give_uniform_scores() {
        let ds = toy_dataset(
            2,
            3,
            &[(&[0, 1], Claimed), (&[1, 0], NotClaimed)],
        );
        let model = train_kstar(&ds, KStarConfig::default()).unwrap();
        // the query differs from each instance in exactly one attribute
        let p = model.predict(&[0, 0]);
        assert!((p.get(Claimed) - 0.5).abs() < 1e-12);
        assert!((p.get(NotClaimed) - 0.5).abs() < 1e-12);
        assert_eq!(p.get(Anonymous), 0.0);
    }

    #[test]
    fn tiny_blend_matches_the_nearest_neighbor_argmax() {
        let mut rng = crate::rng::stream_rng(4, "kstar-test", 0);
        let rows: Vec<(Vec<u16>, ClassLabel)> = (0..80)
            .map(|_| {
                let codes: Vec<u16> = (0..6).map(|_| rng.gen_range(0..5u16)).collect();
                (codes, ClassLabel::from_index(rng.gen_range(0..3)).unwrap())
            })
            .collect();
        let borrowed: Vec<(&[u16], ClassLabel)> =
            rows.iter().map(|(c, l)| (c.as_slice(), *l)).collect();
        let ds = toy_dataset(6, 5, &borrowed);
        let model = train_kstar(&ds, KStarConfig { blend: 1e-6 }).unwrap();
        let index = NeighborIndex::build(&ds, IndexVariant::LinearScan).unwrap();

        let mut checked = 0;
        let mut attempts = 0;
        while checked < 200 && attempts < 5000 {
            attempts += 1;
            let query: Vec<u16> = (0..6).map(|_| rng.gen_range(0..5u16)).collect();
            // the 1-NN oracle is only well-defined when the minimum
            // distance is not shared across classes
            let ranked = index.k_nearest(&query, ds.len());
            let best_d = ranked[0].0;
            let tied: Vec<ClassLabel> = ranked
                .iter()
                .take_while(|(d, _)| *d == best_d)
                .map(|(_, i)| ds.records()[*i].label)
                .collect();
            if tied.iter().any(|&l| l != tied[0]) {
                continue;
            }
            checked += 1;
            assert_eq!(model.predict(&query).argmax(), tied[0]);
        }
        assert_eq!(checked, 200, "not enough tie-free queries generated");
    }

    #[test]
    fn blend_outside_range_is_rejected() {
        let ds = toy_dataset(1, 2, &[(&[0], Claimed)]);
        for blend in [0.0, -0.5, 1.5] {
            assert!(matches!(
                train_kstar(&ds, KStarConfig { blend }).unwrap_err(),
                ClassifierError::InvalidHyperparameter(_)
            ));
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = toy_dataset(1, 2, &[]);
        assert_eq!(
            train_kstar(&ds, KStarConfig::default()).unwrap_err(),
            ClassifierError::EmptyDataset
        );
    }

    #[test]
    fn full_blend_zeroes_identity_mass_but_stays_normalized() {
        // blend 1.0: staying has probability zero, so a query matching
        // the only instance anywhere gets zero total mass and falls back
        // to the uniform distribution
        let ds = toy_dataset(2, 2, &[(&[0, 0], Claimed)]);
        let model = train_kstar(&ds, KStarConfig { blend: 1.0 }).unwrap();
        let p = model.predict(&[0, 1]);
        assert_eq!(p.as_array(), [1.0 / 3.0; 3]);
        // a query differing everywhere still reaches the stored instance
        let q = model.predict(&[1, 1]);
        assert_eq!(q.get(Claimed), 1.0);
    }

    #[test]
    fn weights_factor_over_attributes() {
        let ds = toy_dataset(2, 2, &[(&[0, 0], Claimed)]);
        let model = train_kstar(&ds, KStarConfig { blend: 0.3 }).unwrap();
        // attributes have 3 codes (c0, c1, U): stay = 0.7, move = 0.15
        let same = model.instance_weight(&[0, 0], &[0, 0]);
        let one_off = model.instance_weight(&[0, 1], &[0, 0]);
        let two_off = model.instance_weight(&[1, 1], &[0, 0]);
        assert!((same - 0.7 * 0.7).abs() < 1e-12);
        assert!((one_off - 0.7 * 0.15).abs() < 1e-12);
        assert!((two_off - 0.15 * 0.15).abs() < 1e-12);
    }
}
