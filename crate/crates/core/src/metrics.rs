//! Confusion-matrix accounting and derived detection scores.
//!
//! Attack is the positive class (label 1) everywhere. All scores live in
//! `[0, 1]`; a `0/0` denominator yields 0 so an all-normal predictor is
//! penalized rather than undefined.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and truth vectors have different lengths ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("no entries to aggregate")]
    Empty,
}

/// Counts of the four prediction outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Tallies predictions against ground truth (1 = attack).
pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Accuracy, precision, recall and F1 for one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub prec: f64,
    pub rec: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Derives the four scores from a confusion matrix.
pub fn compute(cm: &ConfusionMatrix) -> Result<Scores, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    Ok(Scores {
        acc: ratio(cm.tp + cm.tn, cm.total()),
        prec: ratio(cm.tp, cm.tp + cm.fp),
        rec: ratio(cm.tp, cm.tp + cm.fn_),
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fn_ + cm.fp),
    })
}

/// Mean and sample standard deviation of each score across repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Scores,
    pub std: Scores,
    pub n: usize,
}

/// Aggregates repeated evaluations; std uses the `n - 1` denominator and is 0
/// for a single entry.
pub fn aggregate(entries: &[Scores]) -> Result<Aggregate, MetricsError> {
    if entries.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = entries.len() as f64;
    let mean_of = |f: fn(&Scores) -> f64| entries.iter().map(f).sum::<f64>() / n;
    let mean = Scores {
        acc: mean_of(|s| s.acc),
        prec: mean_of(|s| s.prec),
        rec: mean_of(|s| s.rec),
        f1: mean_of(|s| s.f1),
    };
    let std_of = |f: fn(&Scores) -> f64, m: f64| {
        if entries.len() < 2 {
            0.0
        } else {
            (entries.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        }
    };
    let std = Scores {
        acc: std_of(|s| s.acc, mean.acc),
        prec: std_of(|s| s.prec, mean.prec),
        rec: std_of(|s| s.rec, mean.rec),
        f1: std_of(|s| s.f1, mean.f1),
    };
    Ok(Aggregate { mean, std, n: entries.len() })
}
