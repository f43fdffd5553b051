//! From-scratch dense neural networks: layers, losses, reverse-mode
//! gradients, the Adam optimizer, gradient checking and the stacked
//! autoencoder built on top.
//!
//! Everything is seeded and single-threaded, so training is bit-reproducible
//! given `(inputs, seed)`.

mod adam;
mod gradcheck;
mod layer;
mod loss;
mod mlp;
mod sae;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use gradcheck::grad_check;
pub use layer::{Activation, DenseLayer};
pub use loss::{Loss, PROB_CLIP};
pub use mlp::{backward, forward, train_mlp, ForwardCache, LayerGrads, MlpModel, TrainOptions};
pub use sae::{train_autoencoder, SaeModel};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite activation encountered")]
    NonFiniteActivation,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("loss weights must satisfy w_s >= w_l > 0 (got w_s={w_s}, w_l={w_l})")]
    InvalidWeights { w_s: f64, w_l: f64 },
    #[error("parameter/gradient shape mismatch: {params} parameters vs {grads} gradients")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("forward cache does not match this model")]
    StaleCache,
}
