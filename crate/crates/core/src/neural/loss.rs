//! Training losses. Values are means over all prediction elements, so a
//! single-output classifier matches the per-sample cross-entropy exactly.

use super::NeuralError;
use crate::matrix::Matrix;

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before logs so
/// the cross-entropy stays finite.
pub const PROB_CLIP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Loss {
    /// Binary cross-entropy.
    Bce,
    /// Class-weighted binary cross-entropy; `w_s` scales the attack terms
    /// and `w_l` the normal terms. Requires `w_s >= w_l > 0`.
    WeightedBce { w_s: f64, w_l: f64 },
    /// Mean squared error; used by the gradient-check harness.
    SquaredError,
}

impl Loss {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if let Loss::WeightedBce { w_s, w_l } = *self {
            if !(w_s >= w_l && w_l > 0.0) {
                return Err(NeuralError::InvalidWeights { w_s, w_l });
            }
        }
        Ok(())
    }

    fn check_dims(pred: &Matrix, target: &Matrix) -> Result<(), NeuralError> {
        if pred.rows() != target.rows() || pred.cols() != target.cols() {
            return Err(NeuralError::DimensionMismatch {
                expected: target.rows() * target.cols(),
                got: pred.rows() * pred.cols(),
            });
        }
        Ok(())
    }

    /// Mean loss over all elements.
    pub fn value(&self, pred: &Matrix, target: &Matrix) -> Result<f64, NeuralError> {
        self.validate()?;
        Self::check_dims(pred, target)?;
        let n = (pred.rows() * pred.cols()) as f64;
        let (mut acc, clip) = (0.0, PROB_CLIP);
        match *self {
            Loss::Bce => {
                for (&p, &y) in pred.data().iter().zip(target.data()) {
                    let p = p.clamp(clip, 1.0 - clip);
                    acc -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
                }
            }
            Loss::WeightedBce { w_s, w_l } => {
                for (&p, &y) in pred.data().iter().zip(target.data()) {
                    let p = p.clamp(clip, 1.0 - clip);
                    acc -= w_s * y * p.ln() + w_l * (1.0 - y) * (1.0 - p).ln();
                }
            }
            Loss::SquaredError => {
                for (&p, &y) in pred.data().iter().zip(target.data()) {
                    acc += (p - y) * (p - y);
                }
            }
        }
        Ok(acc / n)
    }

    /// Gradient of [`Loss::value`] with respect to the predictions. The
    /// clip is part of the function being differentiated, so the gradient
    /// is zero outside the clip range.
    pub fn grad(&self, pred: &Matrix, target: &Matrix) -> Result<Matrix, NeuralError> {
        self.validate()?;
        Self::check_dims(pred, target)?;
        let n = (pred.rows() * pred.cols()) as f64;
        let clip = PROB_CLIP;
        let mut out = Matrix::zeros(pred.rows(), pred.cols());
        for ((g, &p), &y) in out.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
            *g = match *self {
                Loss::Bce => {
                    if p < clip || p > 1.0 - clip {
                        0.0
                    } else {
                        -(y / p - (1.0 - y) / (1.0 - p)) / n
                    }
                }
                Loss::WeightedBce { w_s, w_l } => {
                    if p < clip || p > 1.0 - clip {
                        0.0
                    } else {
                        -(w_s * y / p - w_l * (1.0 - y) / (1.0 - p)) / n
                    }
                }
                Loss::SquaredError => 2.0 * (p - y) / n,
            };
        }
        Ok(out)
    }
}
