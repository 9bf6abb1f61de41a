//! Multilayer perceptron on one-hot encoded records: logistic units
//! throughout, trained by stochastic gradient descent with
//! backpropagated deltas.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{ClassLabel, Dataset};
use crate::rng::stream_rng;

use super::{ClassProbabilities, ClassifierError};

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Sample error energy: half the sum of squared output errors.
pub fn error_energy(errors: &[f64]) -> f64 {
    0.5 * errors.iter().map(|e| e * e).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub eta: f64,
    pub epochs: usize,
}

impl MlpConfig {
    /// One hidden layer of half the one-hot width (at least four units),
    /// learning rate 0.3, 500 epochs.
    pub fn default_for_input(input_width: usize) -> MlpConfig {
        MlpConfig {
            hidden: vec![(input_width / 2).max(4)],
            eta: 0.3,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    /// weights[j][i]: input i to unit j.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Layer {
        Layer {
            weights: vec![vec![0.0; n_in]; n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn activate(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, bias)| {
                let v: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + bias;
                sigmoid(v)
            })
            .collect()
    }
}

/// Per-layer gradients of the sample error with respect to weights and
/// biases.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Vec<Vec<f64>>>,
    pub d_biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub eta: f64,
    pub(crate) attr_sizes: Vec<usize>,
    pub(crate) layers: Vec<Layer>,
}

impl MlpModel {
    /// Fresh network with the given layer widths and all-zero weights.
    pub fn zeroed(attr_sizes: Vec<usize>, hidden: &[usize], eta: f64) -> MlpModel {
        let input_width: usize = attr_sizes.iter().sum();
        let mut sizes = vec![input_width];
        sizes.extend_from_slice(hidden);
        sizes.push(ClassLabel::COUNT);
        let layers = sizes
            .windows(2)
            .map(|pair| Layer::zeros(pair[0], pair[1]))
            .collect();
        MlpModel {
            eta,
            attr_sizes,
            layers,
        }
    }

    /// Node counts per layer, input first.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_width()];
        sizes.extend(self.layers.iter().map(|l| l.biases.len()));
        sizes
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// (fan-in, fan-out) of weight layer `l`.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        let layer = &self.layers[l];
        (layer.weights.first().map_or(0, Vec::len), layer.biases.len())
    }

    /// Copy with one weight (or, with `input` None, one bias) shifted by
    /// `delta`; the probe used for finite-difference gradient checks.
    pub fn nudged(&self, layer: usize, unit: usize, input: Option<usize>, delta: f64) -> MlpModel {
        let mut copy = self.clone();
        match input {
            Some(i) => copy.layers[layer].weights[unit][i] += delta,
            None => copy.layers[layer].biases[unit] += delta,
        }
        copy
    }

    pub fn input_width(&self) -> usize {
        self.layers
            .first()
            .map(|l| l.weights.first().map_or(0, Vec::len))
            .unwrap_or(0)
    }

    /// Concatenated one-hot encoding of a record's codes.
    pub fn one_hot(&self, codes: &[u16]) -> Vec<f64> {
        assert_eq!(codes.len(), self.attr_sizes.len(), "record arity mismatch");
        let width: usize = self.attr_sizes.iter().sum();
        let mut input = vec![0.0; width];
        let mut offset = 0usize;
        for (&code, &size) in codes.iter().zip(&self.attr_sizes) {
            input[offset + code as usize] = 1.0;
            offset += size;
        }
        input
    }

    /// Activations of every layer, input first, output last.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<Vec<f64>>, ClassifierError> {
        if input.len() != self.input_width() {
            return Err(ClassifierError::ShapeMismatch {
                expected: self.input_width(),
                found: input.len(),
            });
        }
        let mut activations = vec![input.to_vec()];
        for layer in &self.layers {
            let next = layer.activate(activations.last().unwrap());
            activations.push(next);
        }
        Ok(activations)
    }

    /// Output activations normalized into class probabilities.
    pub fn predict_input(&self, input: &[f64]) -> Result<ClassProbabilities, ClassifierError> {
        let activations = self.forward(input)?;
        let output = activations.last().unwrap();
        Ok(ClassProbabilities::from_scores([
            output[0], output[1], output[2],
        ]))
    }

    pub fn predict(&self, codes: &[u16]) -> ClassProbabilities {
        self.predict_input(&self.one_hot(codes))
            .expect("one-hot width matches the input layer")
    }

    /// Error energy of one sample against a target vector.
    pub fn sample_error(&self, input: &[f64], target: &[f64; 3]) -> Result<f64, ClassifierError> {
        let activations = self.forward(input)?;
        let output = activations.last().unwrap();
        let errors: Vec<f64> = target.iter().zip(output).map(|(d, y)| d - y).collect();
        Ok(error_energy(&errors))
    }

    /// Gradients of the sample error. Output deltas are e_j phi'(v_j);
    /// hidden deltas backpropagate through the next layer's weights; the
    /// weight gradient is -delta_j * y_i.
    pub fn gradients(&self, input: &[f64], target: &[f64; 3]) -> Result<Gradients, ClassifierError> {
        let activations = self.forward(input)?;
        let output = activations.last().unwrap();

        // delta = -dE/dv, layer by layer from the output backwards
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let last = self.layers.len() - 1;
        deltas[last] = output
            .iter()
            .zip(target)
            .map(|(y, d)| (d - y) * y * (1.0 - y))
            .collect();
        for l in (0..last).rev() {
            let next_layer = &self.layers[l + 1];
            let y = &activations[l + 1];
            deltas[l] = (0..y.len())
                .map(|j| {
                    let back: f64 = deltas[l + 1]
                        .iter()
                        .zip(&next_layer.weights)
                        .map(|(delta_k, row)| delta_k * row[j])
                        .sum();
                    back * y[j] * (1.0 - y[j])
                })
                .collect();
        }

        let mut d_weights = Vec::with_capacity(self.layers.len());
        let mut d_biases = Vec::with_capacity(self.layers.len());
        for (l, delta) in deltas.iter().enumerate() {
            let prev = &activations[l];
            d_weights.push(
                delta
                    .iter()
                    .map(|dj| prev.iter().map(|yi| -dj * yi).collect())
                    .collect(),
            );
            d_biases.push(delta.iter().map(|dj| -dj).collect());
        }
        Ok(Gradients {
            d_weights,
            d_biases,
        })
    }

    /// One gradient-descent update in place: w += eta * delta_j * y_i.
    pub fn backprop_step(&mut self, input: &[f64], target: &[f64; 3]) -> Result<(), ClassifierError> {
        let gradients = self.gradients(input, target)?;
        let eta = self.eta;
        for (layer, (dw, db)) in self
            .layers
            .iter_mut()
            .zip(gradients.d_weights.iter().zip(&gradients.d_biases))
        {
            for (row, drow) in layer.weights.iter_mut().zip(dw) {
                for (w, d) in row.iter_mut().zip(drow) {
                    *w -= eta * d;
                }
            }
            for (b, d) in layer.biases.iter_mut().zip(db) {
                *b -= eta * d;
            }
        }
        Ok(())
    }
}

pub fn one_hot_target(label: ClassLabel) -> [f64; 3] {
    let mut target = [0.0; 3];
    target[label.index()] = 1.0;
    target
}

#[derive(Debug, Clone)]
pub struct MlpTraining {
    pub model: MlpModel,
    /// Mean sample error over the training set after each epoch.
    pub epoch_error: Vec<f64>,
}

/// Stochastic gradient descent: seeded uniform init in [-0.5, 0.5], a
/// seeded shuffle per epoch, one update per record.
pub fn train_mlp(
    dataset: &Dataset,
    config: &MlpConfig,
    seed: u64,
) -> Result<MlpTraining, ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if config.epochs == 0 {
        return Err(ClassifierError::InvalidHyperparameter(
            "epochs must be >= 1".into(),
        ));
    }
    if !(config.eta > 0.0) {
        return Err(ClassifierError::InvalidHyperparameter(format!(
            "eta must be > 0, got {}",
            config.eta
        )));
    }
    if config.hidden.is_empty() || config.hidden.iter().any(|&h| h == 0) {
        return Err(ClassifierError::InvalidHyperparameter(
            "hidden layers must be non-empty and positive".into(),
        ));
    }

    let mut model = MlpModel::zeroed(
        dataset.schema().feature_sizes(),
        &config.hidden,
        config.eta,
    );
    let mut rng = stream_rng(seed, "mlp", 0);
    for layer in &mut model.layers {
        for row in &mut layer.weights {
            for w in row.iter_mut() {
                *w = rng.gen_range(-0.5..0.5);
            }
        }
        for b in &mut layer.biases {
            *b = rng.gen_range(-0.5..0.5);
        }
    }

    let samples: Vec<(Vec<f64>, [f64; 3])> = dataset
        .records()
        .iter()
        .map(|r| (model.one_hot(&r.codes), one_hot_target(r.label)))
        .collect();

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_error = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (input, target) = &samples[i];
            model.backprop_step(input, target)?;
        }
        let mean: f64 = samples
            .iter()
            .map(|(input, target)| model.sample_error(input, target).unwrap())
            .sum::<f64>()
            / samples.len() as f64;
        epoch_error.push(mean);
    }
    Ok(MlpTraining { model, epoch_error })
}
