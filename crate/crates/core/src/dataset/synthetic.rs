//! Synthetic dataset generation from per-class attribute distributions.
//! The generator returns its own draw tally so tests have an oracle for
//! the class distribution.

use rand::Rng;
use thiserror::Error;

use super::{
    AttributeDef, AttributeKind, AttributeSchema, ClassLabel, Dataset, EncodedRecord, UNKNOWN_CODE,
};
use crate::rng::stream_rng;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("class weights sum to {0}, expected 1")]
    ClassWeightSum(f64),
    #[error("class {class} attribute `{attribute}`: code weights sum to {sum}, expected 1")]
    InvalidDistribution {
        class: ClassLabel,
        attribute: String,
        sum: f64,
    },
    #[error("class {class} attribute `{attribute}`: {found} weights for {expected} codes")]
    WeightLength {
        class: ClassLabel,
        attribute: String,
        expected: usize,
        found: usize,
    },
    #[error("negative weight in class {class}")]
    NegativeWeight { class: ClassLabel },
    #[error("spec declares no classes")]
    NoClasses,
}

#[derive(Debug, Clone)]
pub struct SyntheticAttribute {
    pub name: String,
    pub codes: Vec<String>,
}

/// Per-class generation recipe: a class weight and one distribution over
/// each attribute's codes.
#[derive(Debug, Clone)]
pub struct ClassRecipe {
    pub label: ClassLabel,
    pub weight: f64,
    pub code_weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub attributes: Vec<SyntheticAttribute>,
    pub classes: Vec<ClassRecipe>,
}

impl SyntheticSpec {
    /// Spec where each class draws every attribute from its own block of
    /// `codes_per_class` codes, so class-conditional supports are
    /// disjoint and the Bayes error is zero.
    pub fn disjoint_support(
        n_attributes: usize,
        codes_per_class: usize,
        weights: [f64; 3],
    ) -> SyntheticSpec {
        let n_codes = codes_per_class * 3;
        let attributes = (0..n_attributes)
            .map(|a| SyntheticAttribute {
                name: format!("a{a}"),
                codes: (0..n_codes).map(|c| format!("v{c}")).collect(),
            })
            .collect();
        let classes = ClassLabel::ALL
            .iter()
            .enumerate()
            .map(|(k, &label)| {
                let mut dist = vec![0.0; n_codes];
                for c in 0..codes_per_class {
                    dist[k * codes_per_class + c] = 1.0 / codes_per_class as f64;
                }
                ClassRecipe {
                    label,
                    weight: weights[k],
                    code_weights: vec![dist; n_attributes],
                }
            })
            .collect();
        SyntheticSpec {
            attributes,
            classes,
        }
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        if self.classes.is_empty() {
            return Err(SyntheticError::NoClasses);
        }
        let class_sum: f64 = self.classes.iter().map(|c| c.weight).sum();
        if (class_sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(SyntheticError::ClassWeightSum(class_sum));
        }
        for recipe in &self.classes {
            if recipe.weight < 0.0 {
                return Err(SyntheticError::NegativeWeight {
                    class: recipe.label,
                });
            }
            if recipe.code_weights.len() != self.attributes.len() {
                return Err(SyntheticError::WeightLength {
                    class: recipe.label,
                    attribute: "<attribute list>".into(),
                    expected: self.attributes.len(),
                    found: recipe.code_weights.len(),
                });
            }
            for (attr, weights) in self.attributes.iter().zip(&recipe.code_weights) {
                if weights.len() != attr.codes.len() {
                    return Err(SyntheticError::WeightLength {
                        class: recipe.label,
                        attribute: attr.name.clone(),
                        expected: attr.codes.len(),
                        found: weights.len(),
                    });
                }
                if weights.iter().any(|&w| w < 0.0) {
                    return Err(SyntheticError::NegativeWeight {
                        class: recipe.label,
                    });
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                    return Err(SyntheticError::InvalidDistribution {
                        class: recipe.label,
                        attribute: attr.name.clone(),
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    fn schema(&self) -> AttributeSchema {
        let mut defs: Vec<AttributeDef> = self
            .attributes
            .iter()
            .map(|attr| {
                let mut codes = attr.codes.clone();
                if !codes.iter().any(|c| c == UNKNOWN_CODE) {
                    codes.push(UNKNOWN_CODE.to_string());
                }
                AttributeDef::new(attr.name.clone(), AttributeKind::Categorical, codes)
            })
            .collect();
        defs.push(AttributeDef::new("class", AttributeKind::Class, vec![]));
        AttributeSchema::new(defs).expect("synthetic schema is well-formed")
    }
}

#[derive(Debug)]
pub struct SyntheticOutcome {
    pub dataset: Dataset,
    /// Exact per-class draw counts, indexed by `ClassLabel::index`.
    pub tally: [usize; 3],
}

pub fn generate_synthetic(
    spec: &SyntheticSpec,
    n: usize,
    seed: u64,
) -> Result<SyntheticOutcome, SyntheticError> {
    spec.validate()?;
    let schema = spec.schema();
    let mut rng = stream_rng(seed, "synthetic", 0);
    let mut records = Vec::with_capacity(n);
    let mut tally = [0usize; 3];
    for _ in 0..n {
        let class_idx = draw(&mut rng, spec.classes.iter().map(|c| c.weight));
        let recipe = &spec.classes[class_idx];
        tally[recipe.label.index()] += 1;
        let codes = recipe
            .code_weights
            .iter()
            .map(|weights| draw(&mut rng, weights.iter().copied()) as u16)
            .collect();
        records.push(EncodedRecord {
            codes,
            label: recipe.label,
            geo: None,
        });
    }
    let dataset = Dataset::new(schema, records).expect("generated records conform");
    Ok(SyntheticOutcome { dataset, tally })
}

fn draw(rng: &mut impl Rng, weights: impl Iterator<Item = f64>) -> usize {
    let weights: Vec<f64> = weights.collect();
    let roll: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_nonzero = i;
        }
        acc += w;
        if roll < acc {
            return i;
        }
    }
    // roll landed in the rounding tail; return the last drawable index
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_spec() -> SyntheticSpec {
        SyntheticSpec {
            attributes: vec![
                SyntheticAttribute {
                    name: "a0".into(),
                    codes: vec!["x".into(), "y".into()],
                },
                SyntheticAttribute {
                    name: "a1".into(),
                    codes: vec!["p".into(), "q".into(), "r".into()],
                },
            ],
            classes: vec![
                ClassRecipe {
                    label: ClassLabel::Claimed,
                    weight: 0.5,
                    code_weights: vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]],
                },
                ClassRecipe {
                    label: ClassLabel::Anonymous,
                    weight: 0.5,
                    code_weights: vec![vec![0.9, 0.1], vec![1.0, 0.0, 0.0]],
                },
            ],
        }
    }

    #[test]
    fn single_class_spec_yields_identical_labels() {
        let mut spec = uniform_spec();
        spec.classes.truncate(1);
        spec.classes[0].weight = 1.0;
        let out = generate_synthetic(&spec, 50, 9).unwrap();
        assert!(out
            .dataset
            .records()
            .iter()
            .all(|r| r.label == ClassLabel::Claimed));
        assert_eq!(out.tally, [50, 0, 0]);
    }

    #[test]
    fn n_zero_yields_an_empty_dataset() {
        let out = generate_synthetic(&uniform_spec(), 0, 1).unwrap();
        assert!(out.dataset.is_empty());
        assert_eq!(out.tally, [0, 0, 0]);
    }

    #[test]
    fn tally_matches_the_dataset_distribution() {
        let out = generate_synthetic(&uniform_spec(), 500, 11).unwrap();
        assert_eq!(out.dataset.class_distribution(), out.tally);
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let a = generate_synthetic(&uniform_spec(), 200, 5).unwrap();
        let b = generate_synthetic(&uniform_spec(), 200, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate_synthetic(&uniform_spec(), 200, 6).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn bad_distribution_is_rejected() {
        let mut spec = uniform_spec();
        spec.classes[0].code_weights[0] = vec![0.5, 0.6];
        assert!(matches!(
            generate_synthetic(&spec, 10, 0).unwrap_err(),
            SyntheticError::InvalidDistribution { .. }
        ));
    }

    #[test]
    fn disjoint_support_spec_draws_within_class_blocks() {
        let spec = SyntheticSpec::disjoint_support(4, 2, [0.3, 0.4, 0.3]);
        let out = generate_synthetic(&spec, 300, 3).unwrap();
        for record in out.dataset.records() {
            let block = record.label.index() as u16;
            for &code in &record.codes {
                assert!(code / 2 == block, "code {code} outside class block");
            }
        }
    }
}
