//! AdaBoost (binary SAMME) over depth-1 decision stumps fitted to weighted
//! misclassification error.

use super::TreeError;
use crate::matrix::Matrix;

/// `x[feature] <= threshold` routes left; each side predicts its weighted
/// attack probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left_prob: f64,
    pub right_prob: f64,
}

impl Stump {
    pub fn prob(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left_prob
        } else {
            self.right_prob
        }
    }

    pub fn label(&self, row: &[f64]) -> u8 {
        u8::from(self.prob(row) >= 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaBoostModel {
    /// Stumps with their vote weights.
    pub rounds: Vec<(Stump, f64)>,
    /// Final (normalized) sample weights, kept for diagnostics.
    pub final_weights: Vec<f64>,
}

/// Best stump under weighted misclassification error. Thresholds are
/// midpoints of consecutive distinct sorted values; ties break toward the
/// lower feature index then lower threshold. When no feature admits a split
/// the stump degenerates to a single weighted-majority leaf.
fn fit_stump(x: &Matrix, y: &[u8], w: &[f64]) -> Stump {
    let n = x.rows();
    let total_pos: f64 = (0..n).filter(|&r| y[r] == 1).map(|r| w[r]).sum();
    let total: f64 = w.iter().sum();

    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, error)
    let mut column: Vec<(f64, u8, f64)> = Vec::with_capacity(n);
    for feature in 0..x.cols() {
        column.clear();
        column.extend((0..n).map(|r| (x.get(r, feature), y[r], w[r])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut left_pos = 0.0;
        let mut left_w = 0.0;
        for i in 0..n - 1 {
            left_pos += if column[i].1 == 1 { column[i].2 } else { 0.0 };
            left_w += column[i].2;
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            let right_pos = total_pos - left_pos;
            let right_w = total - left_w;
            // Each side predicts its weighted majority; the error is the
            // weight of the minority on each side.
            let left_err = left_pos.min(left_w - left_pos);
            let right_err = right_pos.min(right_w - right_pos);
            let err = left_err + right_err;
            let threshold = 0.5 * (column[i].0 + column[i + 1].0);
            if best.map_or(true, |(_, _, e)| err < e) {
                best = Some((feature, threshold, err));
            }
        }
    }

    match best {
        Some((feature, threshold, _)) => {
            let mut side = [(0.0, 0.0); 2]; // (pos weight, total weight) for left/right
            for r in 0..n {
                let s = usize::from(x.get(r, feature) > threshold);
                side[s].1 += w[r];
                if y[r] == 1 {
                    side[s].0 += w[r];
                }
            }
            let prob = |(p, t): (f64, f64)| if t > 0.0 { p / t } else { 0.0 };
            Stump { feature, threshold, left_prob: prob(side[0]), right_prob: prob(side[1]) }
        }
        None => Stump {
            feature: 0,
            threshold: f64::INFINITY,
            left_prob: if total > 0.0 { total_pos / total } else { 0.0 },
            right_prob: 0.0,
        },
    }
}

/// Binary SAMME: each round fits a stump to the reweighted samples, scores
/// it with `beta = ln((1 - err) / err)`, and up-weights its mistakes.
/// Stops early on a perfect stump or when the error reaches 0.5. The
/// procedure is exhaustive-search based and fully deterministic.
pub fn fit_adaboost(x: &Matrix, y: &[u8], n_rounds: usize) -> Result<AdaBoostModel, TreeError> {
    let n = x.rows();
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == n {
        return Err(TreeError::SingleClassDataset);
    }
    assert!(n_rounds >= 1, "need at least one round");

    let mut w = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    for _ in 0..n_rounds {
        let stump = fit_stump(x, y, &w);
        let mut err = 0.0;
        let mut wrong = vec![false; n];
        for r in 0..n {
            if stump.label(x.row(r)) != y[r] {
                err += w[r];
                wrong[r] = true;
            }
        }
        if err >= 0.5 {
            break; // no better than chance on the current weighting
        }
        let eps = 1e-10;
        let beta = ((1.0 - err).max(eps) / err.max(eps)).ln();
        rounds.push((stump, beta));
        if err <= eps {
            break; // perfect stump, nothing left to reweight
        }
        for r in 0..n {
            if wrong[r] {
                w[r] *= beta.exp();
            }
        }
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        debug_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    if rounds.is_empty() {
        // Degenerate data: keep the first stump with a nominal weight so the
        // model is never empty.
        rounds.push((fit_stump(x, y, &w), 1.0));
    }
    Ok(AdaBoostModel { rounds, final_weights: w })
}

/// Weighted vote: `score = sum(beta * h) / sum(beta)` with `h` in `{0, 1}`;
/// label 1 iff the score reaches 0.5.
pub fn predict_adaboost(model: &AdaBoostModel, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>), TreeError> {
    let need = model.rounds.iter().map(|(s, _)| s.feature + 1).max().unwrap_or(0);
    if x.cols() < need {
        return Err(TreeError::DimensionMismatch { expected: need, got: x.cols() });
    }
    let beta_sum: f64 = model.rounds.iter().map(|(_, b)| b).sum();
    let mut probs = Vec::with_capacity(x.rows());
    let mut labels = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let score: f64 = model
            .rounds
            .iter()
            .map(|(stump, beta)| beta * f64::from(stump.label(row)))
            .sum::<f64>()
            / beta_sum;
        probs.push(score);
        labels.push(u8::from(score >= 0.5));
    }
    Ok((probs, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_1d() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![0.1 * i as f64]);
            labels.push(u8::from(i >= 5));
        }
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn perfect_stump_stops_training() {
        let (x, y) = separable_1d();
        let model = fit_adaboost(&x, &y, 100).unwrap();
        assert_eq!(model.rounds.len(), 1, "round-1 stump is already perfect");
        let (_, labels) = predict_adaboost(&model, &x).unwrap();
        assert_eq!(labels, y);
    }

    #[test]
    fn weights_remain_distribution() {
        // Noisy labels force several rounds.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            rows.push(vec![(i % 15) as f64, (i % 4) as f64]);
            labels.push(u8::from((i % 15 >= 7) ^ (i % 13 == 0)));
        }
        let x = Matrix::from_rows(&rows);
        let model = fit_adaboost(&x, &labels, 25).unwrap();
        assert!(model.rounds.len() > 1);
        let sum: f64 = model.final_weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "weights sum {sum}");
        assert!(model.rounds.iter().all(|(_, b)| b.is_finite()));
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert_eq!(fit_adaboost(&x, &[1, 1], 10), Err(TreeError::SingleClassDataset));
    }

    #[test]
    fn deterministic() {
        let (x, y) = separable_1d();
        let a = fit_adaboost(&x, &y, 10).unwrap();
        let b = fit_adaboost(&x, &y, 10).unwrap();
        assert_eq!(a, b);
    }
}
