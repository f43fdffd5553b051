//! Stacked autoencoder: ReLU encoder, mirrored decoder with sigmoid
//! reconstruction, trained end-to-end on binary cross-entropy.

use super::layer::Activation;
use super::loss::Loss;
use super::mlp::{forward, train_mlp, MlpModel, TrainOptions};
use super::NeuralError;
use crate::matrix::Matrix;

/// Encoder/decoder pair stored as one network; the first `encoder_len`
/// layers form the encoder and their output is the learned representation.
#[derive(Clone, Debug, PartialEq)]
pub struct SaeModel {
    pub net: MlpModel,
    pub encoder_len: usize,
}

impl SaeModel {
    /// `encoder_dims` are the hidden widths, e.g. `[32, 16]` builds
    /// `input -> 32 -> 16 -> 32 -> input` with a sigmoid output layer.
    pub fn new(input_dim: usize, encoder_dims: &[usize], dropout_rate: f64, seed: u64) -> Self {
        assert!(!encoder_dims.is_empty(), "encoder needs at least one layer");
        let mut dims = vec![input_dim];
        dims.extend_from_slice(encoder_dims);
        for &d in encoder_dims[..encoder_dims.len() - 1].iter().rev() {
            dims.push(d);
        }
        dims.push(input_dim);
        let mut acts = vec![Activation::ReLU; dims.len() - 2];
        acts.push(Activation::Sigmoid);
        Self { net: MlpModel::new(&dims, &acts, dropout_rate, seed), encoder_len: encoder_dims.len() }
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn representation_dim(&self) -> usize {
        self.net.layers[self.encoder_len - 1].out_dim()
    }

    /// Encoder forward pass only; deterministic (no dropout at inference).
    pub fn encode(&self, x: &Matrix) -> Result<Matrix, NeuralError> {
        if x.cols() != self.input_dim() {
            return Err(NeuralError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let mut current = x.clone();
        for layer in &self.net.layers[..self.encoder_len] {
            let z = layer.affine(&current);
            current = z.map(|v| layer.activation.apply(v));
        }
        if !current.all_finite() {
            return Err(NeuralError::NonFiniteActivation);
        }
        Ok(current)
    }

    /// Full encode/decode pass at inference.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix, NeuralError> {
        Ok(forward(&self.net, x, false, None)?.0)
    }

    /// Reconstruction BCE against the inputs themselves.
    pub fn reconstruction_loss(&self, x: &Matrix) -> Result<f64, NeuralError> {
        let recon = self.reconstruct(x)?;
        Loss::Bce.value(&recon, x)
    }
}

/// Trains the autoencoder to reconstruct `x` (values must lie in `[0, 1]`)
/// under BCE with dropout active on hidden layers. Returns per-epoch loss.
pub fn train_autoencoder(
    sae: &mut SaeModel,
    x: &Matrix,
    opts: &TrainOptions,
) -> Result<Vec<f64>, NeuralError> {
    train_mlp(&mut sae.net, x, x, Loss::Bce, opts)
}
