//! Adam optimizer over a flat parameter vector.

use serde::{Deserialize, Serialize};

use super::NeuralError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(n_params: usize, hyper: AdamHyper) -> Self {
        Self { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0, hyper }
    }
}

/// One Adam update with bias correction: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
) -> Result<(), NeuralError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NeuralError::ShapeMismatch { params: params.len(), grads: grads.len() });
    }
    state.t += 1;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(state.t as i32);
    let bc2 = 1.0 - h.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_evaluation() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamHyper::default());
        adam_step(&mut p, &[1.0], &mut s).unwrap();
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vec![3.5, -2.0];
        let mut s = AdamState::new(2, AdamHyper::default());
        adam_step(&mut p, &[0.0, 0.0], &mut s).unwrap();
        assert_eq!(p, vec![3.5, -2.0]);
    }

    #[test]
    fn constant_gradient_updates_stay_bounded() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamHyper::default());
        let mut prev = p[0];
        for _ in 0..2 {
            adam_step(&mut p, &[0.5], &mut s).unwrap();
            let delta = (p[0] - prev).abs();
            assert!(delta <= 1e-3 * 1.001, "per-step update exceeded lr bound: {delta}");
            prev = p[0];
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamHyper::default());
        assert!(matches!(
            adam_step(&mut p, &[1.0, 2.0], &mut s),
            Err(NeuralError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn second_moment_nonnegative() {
        let mut p = vec![1.0; 4];
        let mut s = AdamState::new(4, AdamHyper::default());
        for step in 0..50 {
            let g: Vec<f64> = (0..4).map(|i| ((step * 7 + i) as f64).sin()).collect();
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        assert!(s.v.iter().all(|&v| v >= 0.0));
    }
}
