//! Finite-difference validation of the analytic gradients.

use super::loss::Loss;
use super::mlp::{backward, flatten_grads, forward, MlpModel};
use super::NeuralError;
use crate::matrix::Matrix;

const STEP: f64 = 1e-5;

/// Central finite differences against [`backward`] with dropout inactive.
/// Returns the maximum relative error `|a - n| / max(|a|, |n|, 1e-8)` over
/// all parameters. Intended for small models (≲10³ parameters).
pub fn grad_check(
    model: &MlpModel,
    loss: Loss,
    x: &Matrix,
    y: &Matrix,
) -> Result<f64, NeuralError> {
    let (pred, cache) = forward(model, x, false, None)?;
    let lgrad = loss.grad(&pred, y)?;
    let analytic = flatten_grads(&backward(model, &cache, &lgrad)?);

    let mut probe = model.clone();
    let mut params = model.flatten_params();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let original = params[i];
        params[i] = original + STEP;
        probe.set_params(&params);
        let plus = loss.value(&forward(&probe, x, false, None)?.0, y)?;
        params[i] = original - STEP;
        probe.set_params(&params);
        let minus = loss.value(&forward(&probe, x, false, None)?.0, y)?;
        params[i] = original;
        let numeric = (plus - minus) / (2.0 * STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    probe.set_params(&params);
    Ok(worst)
}
