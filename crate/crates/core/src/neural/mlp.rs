//! Multi-layer perceptron: forward pass with cache, reverse-mode gradients
//! and seeded mini-batch training.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamHyper, AdamState};
use super::layer::{Activation, DenseLayer};
use super::loss::Loss;
use super::NeuralError;
use crate::matrix::Matrix;
use crate::rng::{derive, rng_from, Stream};

/// Dense feed-forward network. Inverted dropout is applied to hidden
/// activations during training only, so inference needs no rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub dropout_rate: f64,
}

impl MlpModel {
    /// Builds a Glorot-initialized network. `dims` lists layer widths from
    /// input to output; `activations` has one entry per layer.
    pub fn new(
        dims: &[usize],
        activations: &[Activation],
        dropout_rate: f64,
        seed: u64,
    ) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert_eq!(dims.len() - 1, activations.len(), "one activation per layer");
        assert!((0.0..1.0).contains(&dropout_rate), "dropout must lie in [0, 1)");
        let mut rng = rng_from(derive(seed, Stream::WeightInit, 0));
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::glorot(w[0], w[1], act, &mut rng))
            .collect();
        Self { layers, dropout_rate }
    }

    /// Classifier shape `[in, hidden.., 1]` with ReLU hidden layers and a
    /// sigmoid output.
    pub fn classifier(input_dim: usize, hidden: &[usize], dropout_rate: f64, seed: u64) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut acts = vec![Activation::ReLU; hidden.len()];
        acts.push(Activation::Sigmoid);
        Self::new(&dims, &acts, dropout_rate, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// Parameters in layer order, weights row-major then biases.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            flat.extend_from_slice(layer.weights.data());
            flat.extend_from_slice(&layer.bias);
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length mismatch");
        let mut at = 0;
        for layer in &mut self.layers {
            let w = layer.weights.data_mut();
            w.copy_from_slice(&flat[at..at + w.len()]);
            at += w.len();
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&flat[at..at + b]);
            at += b;
        }
    }

    /// Inference forward pass that also returns the final hidden layer's
    /// activations (the penultimate layer output; the input itself for a
    /// single-layer net). Used by super-vector fusion.
    pub fn forward_inference(&self, x: &Matrix) -> Result<(Matrix, Matrix), NeuralError> {
        let (out, cache) = forward(self, x, false, None)?;
        let hidden = if self.layers.len() >= 2 {
            cache.inputs.last().expect("non-empty layer list").clone()
        } else {
            x.clone()
        };
        Ok((out, hidden))
    }
}

/// Intermediate state of one forward pass, consumed by [`backward`].
#[derive(Debug)]
pub struct ForwardCache {
    /// Input to each layer (post-dropout of the previous activation).
    pub(crate) inputs: Vec<Matrix>,
    /// Pre-activations per layer.
    zs: Vec<Matrix>,
    /// Post-activations per layer (before dropout).
    activations: Vec<Matrix>,
    /// Inverted-dropout masks for hidden layers (None at inference).
    masks: Vec<Option<Vec<f64>>>,
}

/// Layer-by-layer affine + activation. With `training`, hidden activations
/// get inverted dropout driven by `rng` (required iff dropout is active).
pub fn forward(
    model: &MlpModel,
    x: &Matrix,
    training: bool,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Matrix, ForwardCache), NeuralError> {
    if x.cols() != model.input_dim() {
        return Err(NeuralError::DimensionMismatch {
            expected: model.input_dim(),
            got: x.cols(),
        });
    }
    let n_layers = model.layers.len();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(n_layers),
        zs: Vec::with_capacity(n_layers),
        activations: Vec::with_capacity(n_layers),
        masks: Vec::with_capacity(n_layers),
    };
    let dropout_active = training && model.dropout_rate > 0.0;
    let mut current = x.clone();
    for (li, layer) in model.layers.iter().enumerate() {
        cache.inputs.push(current.clone());
        let z = layer.affine(&current);
        let mut a = z.map(|v| layer.activation.apply(v));
        cache.zs.push(z);
        cache.activations.push(a.clone());
        let is_hidden = li + 1 < n_layers;
        if is_hidden && dropout_active {
            let rng = rng.as_deref_mut().expect("dropout requires an RNG");
            let scale = 1.0 / (1.0 - model.dropout_rate);
            let mask: Vec<f64> = (0..a.rows() * a.cols())
                .map(|_| if rng.gen::<f64>() < model.dropout_rate { 0.0 } else { scale })
                .collect();
            for (v, m) in a.data_mut().iter_mut().zip(&mask) {
                *v *= m;
            }
            cache.masks.push(Some(mask));
        } else {
            cache.masks.push(None);
        }
        current = a;
    }
    if !current.all_finite() {
        return Err(NeuralError::NonFiniteActivation);
    }
    Ok((current, cache))
}

/// Per-layer parameter gradients, shapes matching the model.
#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Reverse-mode differentiation from `d loss / d output` back to every
/// weight and bias.
pub fn backward(
    model: &MlpModel,
    cache: &ForwardCache,
    loss_grad: &Matrix,
) -> Result<Vec<LayerGrads>, NeuralError> {
    if cache.inputs.len() != model.layers.len() {
        return Err(NeuralError::StaleCache);
    }
    for (layer, input) in model.layers.iter().zip(&cache.inputs) {
        if input.cols() != layer.in_dim() {
            return Err(NeuralError::StaleCache);
        }
    }
    let last = model.layers.len() - 1;
    if loss_grad.rows() != cache.activations[last].rows()
        || loss_grad.cols() != cache.activations[last].cols()
    {
        return Err(NeuralError::StaleCache);
    }

    let mut grads: Vec<LayerGrads> = model
        .layers
        .iter()
        .map(|l| LayerGrads {
            weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
            bias: vec![0.0; l.bias.len()],
        })
        .collect();

    // d loss / d (post-activation, post-dropout) of the current layer.
    let mut delta = loss_grad.clone();
    for li in (0..=last).rev() {
        let layer = &model.layers[li];
        // Undo dropout scaling (output layer never has a mask).
        if let Some(mask) = &cache.masks[li] {
            for (v, m) in delta.data_mut().iter_mut().zip(mask) {
                *v *= m;
            }
        }
        // Through the activation: dZ = dA * act'(z).
        let z = &cache.zs[li];
        let a = &cache.activations[li];
        for (i, v) in delta.data_mut().iter_mut().enumerate() {
            *v *= layer.activation.derivative(z.data()[i], a.data()[i]);
        }
        // Parameter gradients.
        let input = &cache.inputs[li];
        grads[li].weights = delta.transpose_a_matmul(input);
        for r in 0..delta.rows() {
            for (b, &d) in grads[li].bias.iter_mut().zip(delta.row(r)) {
                *b += d;
            }
        }
        // Propagate to the previous layer's output.
        if li > 0 {
            delta = delta.matmul(&layer.weights);
        }
    }
    Ok(grads)
}

pub fn flatten_grads(grads: &[LayerGrads]) -> Vec<f64> {
    let mut flat = Vec::new();
    for g in grads {
        flat.extend_from_slice(g.weights.data());
        flat.extend_from_slice(&g.bias);
    }
    flat
}

/// Mini-batch training schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamHyper,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 64, adam: AdamHyper::default(), seed: 0 }
    }
}

/// Trains in place with shuffled mini-batches (reshuffled every epoch) and
/// Adam. Returns the per-epoch mean loss. `epochs = 0` leaves the model
/// untouched and returns an empty history.
pub fn train_mlp(
    model: &mut MlpModel,
    x: &Matrix,
    targets: &Matrix,
    loss: Loss,
    opts: &TrainOptions,
) -> Result<Vec<f64>, NeuralError> {
    loss.validate()?;
    assert!(opts.batch_size >= 1, "batch size must be positive");
    if x.cols() != model.input_dim() {
        return Err(NeuralError::DimensionMismatch { expected: model.input_dim(), got: x.cols() });
    }
    if targets.rows() != x.rows() || targets.cols() != model.output_dim() {
        return Err(NeuralError::DimensionMismatch {
            expected: x.rows() * model.output_dim(),
            got: targets.rows() * targets.cols(),
        });
    }
    let n = x.rows();
    let mut shuffle_rng = rng_from(derive(opts.seed, Stream::Shuffle, 0));
    let mut dropout_rng = rng_from(derive(opts.seed, Stream::Dropout, 0));
    let mut adam = AdamState::new(model.param_count(), opts.adam);
    let mut history = Vec::with_capacity(opts.epochs);
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 0..opts.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (bi, batch) in indices.chunks(opts.batch_size).enumerate() {
            let bx = x.select_rows(batch);
            let by = targets.select_rows(batch);
            let (pred, cache) = forward(model, &bx, true, Some(&mut dropout_rng))?;
            let value = loss.value(&pred, &by)?;
            if !value.is_finite() {
                return Err(NeuralError::NonFiniteLoss { epoch, batch: bi });
            }
            epoch_loss += value * batch.len() as f64;
            let lgrad = loss.grad(&pred, &by)?;
            let grads = backward(model, &cache, &lgrad)?;
            let mut params = model.flatten_params();
            adam_step(&mut params, &flatten_grads(&grads), &mut adam)?;
            model.set_params(&params);
        }
        history.push(epoch_loss / n as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_layer(w: f64, b: f64, act: Activation) -> MlpModel {
        MlpModel {
            layers: vec![DenseLayer {
                weights: Matrix::from_vec(1, 1, vec![w]),
                bias: vec![b],
                activation: act,
            }],
            dropout_rate: 0.0,
        }
    }

    #[test]
    fn forward_relu_and_sigmoid_examples() {
        let model = single_layer(1.0, 0.0, Activation::ReLU);
        let (out, _) = forward(&model, &Matrix::from_vec(2, 1, vec![-3.0, 2.5]), false, None).unwrap();
        assert_eq!(out.data(), &[0.0, 2.5]);

        let model = single_layer(1.0, 0.0, Activation::Sigmoid);
        let (out, _) = forward(&model, &Matrix::from_vec(1, 1, vec![0.0]), false, None).unwrap();
        assert_eq!(out.data(), &[0.5]);
    }

    #[test]
    fn dropout_zero_training_equals_inference() {
        let model = MlpModel::new(
            &[3, 4, 1],
            &[Activation::ReLU, Activation::Sigmoid],
            0.0,
            7,
        );
        let x = Matrix::from_vec(2, 3, vec![0.1, 0.5, 0.9, 0.3, 0.2, 0.7]);
        let mut rng = rng_from(1);
        let (train_out, _) = forward(&model, &x, true, Some(&mut rng)).unwrap();
        let (infer_out, _) = forward(&model, &x, false, None).unwrap();
        assert_eq!(train_out.data(), infer_out.data());
    }

    #[test]
    fn dimension_mismatch_detected() {
        let model = single_layer(1.0, 0.0, Activation::ReLU);
        let err = forward(&model, &Matrix::zeros(1, 2), false, None);
        assert!(matches!(err, Err(NeuralError::DimensionMismatch { .. })));
    }

    #[test]
    fn non_finite_activation_detected() {
        let model = single_layer(1e308, 0.0, Activation::Identity);
        let err = forward(&model, &Matrix::from_vec(1, 1, vec![1e308]), false, None);
        assert_eq!(err.err(), Some(NeuralError::NonFiniteActivation));
    }

    #[test]
    fn zero_loss_grad_gives_zero_param_grads() {
        let model = MlpModel::new(&[2, 3, 1], &[Activation::ReLU, Activation::Sigmoid], 0.0, 3);
        let x = Matrix::from_vec(2, 2, vec![0.2, 0.4, 0.6, 0.8]);
        let (out, cache) = forward(&model, &x, false, None).unwrap();
        let zero = Matrix::zeros(out.rows(), out.cols());
        let grads = backward(&model, &cache, &zero).unwrap();
        for g in grads {
            assert!(g.weights.data().iter().all(|&v| v == 0.0));
            assert!(g.bias.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        // Single ReLU unit with negative pre-activation: no gradient flows.
        let model = single_layer(1.0, -5.0, Activation::ReLU);
        let x = Matrix::from_vec(1, 1, vec![1.0]);
        let (_, cache) = forward(&model, &x, false, None).unwrap();
        let grads = backward(&model, &cache, &Matrix::from_vec(1, 1, vec![1.0])).unwrap();
        assert_eq!(grads[0].weights.data(), &[0.0]);
        assert_eq!(grads[0].bias, vec![0.0]);
    }

    #[test]
    fn stale_cache_detected() {
        let model_a = MlpModel::new(&[2, 3, 1], &[Activation::ReLU, Activation::Sigmoid], 0.0, 3);
        let model_b = MlpModel::new(&[2, 4, 1], &[Activation::ReLU, Activation::Sigmoid], 0.0, 3);
        let x = Matrix::from_vec(1, 2, vec![0.2, 0.4]);
        let (out, cache) = forward(&model_a, &x, false, None).unwrap();
        let lg = Matrix::zeros(out.rows(), out.cols());
        assert_eq!(backward(&model_b, &cache, &lg).err(), Some(NeuralError::StaleCache));
    }

    #[test]
    fn epochs_zero_leaves_model_unchanged() {
        let mut model = MlpModel::classifier(2, &[4], 0.2, 5);
        let before = model.flatten_params();
        let x = Matrix::from_vec(2, 2, vec![0.0, 0.0, 1.0, 1.0]);
        let y = Matrix::from_vec(2, 1, vec![0.0, 1.0]);
        let hist = train_mlp(
            &mut model,
            &x,
            &y,
            Loss::Bce,
            &TrainOptions { epochs: 0, ..Default::default() },
        )
        .unwrap();
        assert!(hist.is_empty());
        assert_eq!(model.flatten_params(), before);
    }

    #[test]
    fn separable_toy_reaches_high_accuracy_and_loss_drops() {
        // 200 points, two linearly separable blobs in 2-D.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let t = (i % 100) as f64 / 100.0;
            if i < 100 {
                rows.push(vec![0.2 + 0.1 * t, 0.2 + 0.08 * ((i * 7 % 13) as f64 / 13.0)]);
                labels.push(0.0);
            } else {
                rows.push(vec![0.8 - 0.1 * t, 0.8 - 0.08 * ((i * 5 % 11) as f64 / 11.0)]);
                labels.push(1.0);
            }
        }
        let x = Matrix::from_rows(&rows);
        let y = Matrix::from_vec(200, 1, labels.clone());
        let mut model = MlpModel::classifier(2, &[8], 0.0, 11);
        let hist = train_mlp(
            &mut model,
            &x,
            &y,
            Loss::Bce,
            &TrainOptions { epochs: 50, batch_size: 16, seed: 11, ..Default::default() },
        )
        .unwrap();
        assert!(hist.last().unwrap() < hist.first().unwrap());
        let (pred, _) = forward(&model, &x, false, None).unwrap();
        let correct = pred
            .data()
            .iter()
            .zip(&labels)
            .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
            .count();
        assert!(correct as f64 / 200.0 >= 0.99, "accuracy {}", correct as f64 / 200.0);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let x = Matrix::from_vec(8, 2, (0..16).map(|i| (i as f64) / 16.0).collect());
        let y = Matrix::from_vec(8, 1, (0..8).map(|i| f64::from(i % 2 == 0)).collect());
        let opts = TrainOptions { epochs: 5, batch_size: 3, seed: 99, ..Default::default() };
        let mut a = MlpModel::classifier(2, &[4], 0.2, 42);
        let mut b = MlpModel::classifier(2, &[4], 0.2, 42);
        let ha = train_mlp(&mut a, &x, &y, Loss::Bce, &opts).unwrap();
        let hb = train_mlp(&mut b, &x, &y, Loss::Bce, &opts).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a.flatten_params(), b.flatten_params());
    }

    #[test]
    fn dropout_mask_expectation_matches_identity() {
        // Mean of dropped-and-scaled activations over many masks stays
        // within 2% of the undropped activation.
        let model = MlpModel {
            layers: vec![
                DenseLayer {
                    weights: Matrix::from_vec(1, 1, vec![1.0]),
                    bias: vec![0.0],
                    activation: Activation::Identity,
                },
                DenseLayer {
                    weights: Matrix::from_vec(1, 1, vec![1.0]),
                    bias: vec![0.0],
                    activation: Activation::Identity,
                },
            ],
            dropout_rate: 0.2,
        };
        let x = Matrix::from_vec(1, 1, vec![1.0]);
        let mut rng = rng_from(4);
        let mut sum = 0.0;
        let trials = 10_000;
        for _ in 0..trials {
            let (out, _) = forward(&model, &x, true, Some(&mut rng)).unwrap();
            sum += out.data()[0];
        }
        let mean = sum / trials as f64;
        assert!((mean - 1.0).abs() < 0.02, "dropout mean {mean}");
    }
}
