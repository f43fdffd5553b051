//! Canonical dataset representation plus the data-side operations of the
//! training pipeline: min-max normalization, repeated stratified splits,
//! balanced-subset construction and imbalance-ratio subsampling.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::rng::{derive, rng_from, Stream};

pub const ATTACK_LABEL: &str = "Attack";
pub const NORMAL_LABEL: &str = "Normal";

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires both classes but only one is present")]
    SingleClassDataset,
    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
}

/// Feature matrix with binary labels (1 = attack).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        assert_eq!(features.rows(), labels.len(), "row/label count mismatch");
        assert_eq!(features.cols(), feature_names.len(), "column/name count mismatch");
        assert!(labels.iter().all(|&l| l <= 1), "labels must be 0 or 1");
        for r in 0..features.rows() {
            for c in 0..features.cols() {
                if !features.get(r, c).is_finite() {
                    return Err(DatasetError::NonFiniteValue { row: r, col: c });
                }
            }
        }
        Ok(Self { features, labels, feature_names })
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn attack_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn normal_count(&self) -> usize {
        self.n_samples() - self.attack_count()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Restricts to a named subset of feature columns, preserving their
    /// current order in the dataset.
    pub fn select_features(&self, names: &[String]) -> Result<Dataset, DatasetError> {
        let mut indices = Vec::new();
        for (i, name) in self.feature_names.iter().enumerate() {
            if names.contains(name) {
                indices.push(i);
            }
        }
        for name in names {
            if !self.feature_names.contains(name) {
                return Err(DatasetError::UnknownFeature(name.clone()));
            }
        }
        Ok(Dataset {
            features: self.features.select_cols(&indices),
            labels: self.labels.clone(),
            feature_names: indices.iter().map(|&i| self.feature_names[i].clone()).collect(),
        })
    }

    /// Delimited-text export with a header row; round-trips through
    /// `ingest::parse_delimited` + `ingest::to_dataset` bit-exactly.
    /// Lines starting with '#' are comments to the parser.
    pub fn export_delimited(&self, delimiter: char) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(delimiter);
        }
        out.push_str("label\n");
        for r in 0..self.n_samples() {
            for v in self.features.row(r) {
                // `{}` prints the shortest decimal that parses back to the
                // same f64, which is what makes the round-trip exact.
                out.push_str(&format!("{}", v));
                out.push(delimiter);
            }
            out.push_str(if self.labels[r] == 1 { ATTACK_LABEL } else { NORMAL_LABEL });
            out.push('\n');
        }
        out
    }
}

/// Per-feature training extrema for min-max scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Per-feature min/max over the training rows.
pub fn minmax_fit(train: &Dataset) -> Result<NormalizationParams, DatasetError> {
    if train.n_samples() == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let d = train.n_features();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for r in 0..train.n_samples() {
        for (c, &v) in train.features.row(r).iter().enumerate() {
            if v < min[c] {
                min[c] = v;
            }
            if v > max[c] {
                max[c] = v;
            }
        }
    }
    Ok(NormalizationParams { min, max })
}

/// Maps every value to `(x - min) / (max - min)` and clips to `[0, 1]`.
/// Constant columns map to 0.
pub fn minmax_apply(params: &NormalizationParams, data: &Dataset) -> Result<Dataset, DatasetError> {
    if data.n_features() != params.min.len() {
        return Err(DatasetError::DimensionMismatch {
            expected: params.min.len(),
            got: data.n_features(),
        });
    }
    let mut m = data.features.clone();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        for (c, v) in row.iter_mut().enumerate() {
            let span = params.max[c] - params.min[c];
            *v = if span == 0.0 { 0.0 } else { ((*v - params.min[c]) / span).clamp(0.0, 1.0) };
        }
    }
    Ok(Dataset { features: m, labels: data.labels.clone(), feature_names: data.feature_names.clone() })
}

/// Repeated stratified-split schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPlan {
    pub seed: u64,
    pub test_fraction: f64,
    pub repetitions: usize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { seed: 42, test_fraction: 0.2, repetitions: 10 }
    }
}

/// Stratified random train/test split, deterministic in
/// `(plan.seed, repetition_index)`. Class proportions are preserved to
/// within one sample per class; each class keeps at least one sample on
/// both sides when it has two or more.
pub fn stratified_split(
    data: &Dataset,
    plan: &SplitPlan,
    repetition_index: usize,
) -> Result<(Dataset, Dataset), DatasetError> {
    let attack = data.attack_count();
    if attack == 0 || attack == data.n_samples() {
        return Err(DatasetError::SingleClassDataset);
    }
    assert!(repetition_index < plan.repetitions, "repetition index out of plan range");
    let mut rng = rng_from(derive(plan.seed, Stream::Split, repetition_index as u64));
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> =
            (0..data.n_samples()).filter(|&i| data.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut t = (plan.test_fraction * n as f64).round() as usize;
        if n >= 2 {
            t = t.clamp(1, n - 1);
        } else {
            t = 0; // singleton classes stay in training
        }
        test_idx.extend_from_slice(&idx[..t]);
        train_idx.extend_from_slice(&idx[t..]);
    }
    // Sort back into original row order so splits are stable views of the data.
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.select(&train_idx), data.select(&test_idx)))
}

/// The `k` half-attack/half-normal training subsets.
#[derive(Clone, Debug)]
pub struct BalancedSets {
    pub sets: Vec<Dataset>,
    /// Normals were sampled with replacement because there were fewer than
    /// `k * attack_count` of them.
    pub with_replacement: bool,
    /// Normal rows left unused after chunking (0 under replacement).
    pub leftover_normals: usize,
}

/// Builds `k` balanced subsets. Every subset holds all attack rows plus an
/// equally sized chunk of normal rows; chunks are disjoint unless normals
/// run short, in which case they are drawn with replacement and the flag is
/// set. Attack sharing can be disabled (`partition_attacks`), which splits
/// the attack rows into `k` disjoint chunks instead.
pub fn make_balanced_sets(
    train: &Dataset,
    k: usize,
    seed: u64,
    partition_attacks: bool,
) -> Result<BalancedSets, DatasetError> {
    assert!(k >= 1, "k must be at least 1");
    let mut attack_idx: Vec<usize> =
        (0..train.n_samples()).filter(|&i| train.labels[i] == 1).collect();
    let mut normal_idx: Vec<usize> =
        (0..train.n_samples()).filter(|&i| train.labels[i] == 0).collect();
    if attack_idx.is_empty() || normal_idx.is_empty() {
        return Err(DatasetError::SingleClassDataset);
    }
    let mut rng = rng_from(derive(seed, Stream::Balance, 0));
    attack_idx.shuffle(&mut rng);
    normal_idx.shuffle(&mut rng);

    let attack_chunks: Vec<Vec<usize>> = if partition_attacks {
        let per = (attack_idx.len() / k).max(1);
        (0..k)
            .map(|i| {
                let lo = (i * per).min(attack_idx.len());
                let hi = if i == k - 1 { attack_idx.len() } else { ((i + 1) * per).min(attack_idx.len()) };
                attack_idx[lo..hi].to_vec()
            })
            .collect()
    } else {
        vec![attack_idx.clone(); k]
    };

    let needed: usize = attack_chunks.iter().map(Vec::len).sum();
    let with_replacement = normal_idx.len() < needed;
    let mut leftover = 0;
    let mut sets = Vec::with_capacity(k);
    let mut cursor = 0;
    for chunk in &attack_chunks {
        let take = chunk.len();
        let normals: Vec<usize> = if with_replacement {
            (0..take).map(|_| normal_idx[rng.gen_range(0..normal_idx.len())]).collect()
        } else {
            let slice = normal_idx[cursor..cursor + take].to_vec();
            cursor += take;
            slice
        };
        let mut rows: Vec<usize> = chunk.iter().chain(normals.iter()).copied().collect();
        rows.shuffle(&mut rng);
        sets.push(train.select(&rows));
    }
    if !with_replacement {
        leftover = normal_idx.len() - cursor;
    }
    Ok(BalancedSets { sets, with_replacement, leftover_normals: leftover })
}

/// Keeps `ceil(ratio * attack_count)` uniformly chosen attack rows (without
/// replacement) and every normal row. Row order is preserved; `ratio = 1`
/// is the identity.
pub fn subsample_attacks(data: &Dataset, ratio: f64, seed: u64) -> Dataset {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must lie in (0, 1]");
    if ratio == 1.0 {
        return data.clone();
    }
    let attack_idx: Vec<usize> =
        (0..data.n_samples()).filter(|&i| data.labels[i] == 1).collect();
    let keep_count = (ratio * attack_idx.len() as f64).ceil() as usize;
    let mut rng = rng_from(derive(seed, Stream::Subsample, 0));
    let mut pool = attack_idx.clone();
    pool.shuffle(&mut rng);
    let mut keep: Vec<bool> = vec![false; data.n_samples()];
    for &i in pool.iter().take(keep_count) {
        keep[i] = true;
    }
    let rows: Vec<usize> = (0..data.n_samples())
        .filter(|&i| data.labels[i] == 0 || keep[i])
        .collect();
    data.select(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n_normal: usize, n_attack: usize) -> Dataset {
        let n = n_normal + n_attack;
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            rows.push(vec![i as f64, (i * i % 17) as f64]);
            labels.push(u8::from(i >= n_normal));
        }
        Dataset::new(Matrix::from_rows(&rows), labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn minmax_fit_examples() {
        let d = Dataset::new(
            Matrix::from_rows(&[vec![2.0, 5.0], vec![4.0, 5.0], vec![10.0, 5.0]]),
            vec![0, 0, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let p = minmax_fit(&d).unwrap();
        assert_eq!(p.min, vec![2.0, 5.0]);
        assert_eq!(p.max, vec![10.0, 5.0]);

        let empty = Dataset::new(Matrix::zeros(0, 2), vec![], vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(minmax_fit(&empty), Err(DatasetError::EmptyDataset));
    }

    #[test]
    fn minmax_apply_examples() {
        let p = NormalizationParams { min: vec![0.0], max: vec![10.0] };
        let d = Dataset::new(
            Matrix::from_rows(&[vec![5.0], vec![0.0], vec![10.0], vec![12.0]]),
            vec![0, 0, 1, 1],
            vec!["x".into()],
        )
        .unwrap();
        let out = minmax_apply(&p, &d).unwrap();
        assert_eq!(out.features().column(0), vec![0.5, 0.0, 1.0, 1.0]);

        // Constant column maps to 0.
        let p = NormalizationParams { min: vec![5.0], max: vec![5.0] };
        let out = minmax_apply(&p, &d).unwrap();
        assert_eq!(out.features().column(0), vec![0.0; 4]);

        let bad = NormalizationParams { min: vec![0.0, 0.0], max: vec![1.0, 1.0] };
        assert!(matches!(minmax_apply(&bad, &d), Err(DatasetError::DimensionMismatch { .. })));
    }

    #[test]
    fn minmax_train_hits_bounds() {
        let d = toy(50, 10);
        let p = minmax_fit(&d).unwrap();
        let out = minmax_apply(&p, &d).unwrap();
        for c in 0..d.n_features() {
            let col = out.features().column(c);
            assert!(col.iter().any(|&v| v == 0.0));
            assert!(col.iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn stratified_split_counts() {
        let d = toy(80, 20);
        let plan = SplitPlan::default();
        let (train, test) = stratified_split(&d, &plan, 0).unwrap();
        assert_eq!(test.n_samples(), 20);
        assert_eq!(test.attack_count(), 4);
        assert_eq!(train.n_samples(), 80);
        assert_eq!(train.attack_count(), 16);
    }

    #[test]
    fn stratified_split_deterministic_and_disjoint() {
        let d = toy(80, 20);
        let plan = SplitPlan::default();
        let (tr1, te1) = stratified_split(&d, &plan, 0).unwrap();
        let (tr2, te2) = stratified_split(&d, &plan, 0).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);

        // Different repetitions give different test sets.
        let (_, te3) = stratified_split(&d, &plan, 1).unwrap();
        assert_ne!(te1, te3);

        // Train and test partition the data: row multisets are disjoint by
        // construction of index selection; check via first-column identity.
        let mut all: Vec<f64> = tr1.features().column(0);
        all.extend(te1.features().column(0));
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn stratified_split_single_class_rejected() {
        let d = Dataset::new(Matrix::from_rows(&[vec![1.0], vec![2.0]]), vec![0, 0], vec!["x".into()])
            .unwrap();
        assert_eq!(
            stratified_split(&d, &SplitPlan::default(), 0),
            Err(DatasetError::SingleClassDataset)
        );
    }

    #[test]
    fn balanced_sets_disjoint_chunks() {
        let d = toy(400, 100);
        let b = make_balanced_sets(&d, 4, 7, false).unwrap();
        assert_eq!(b.sets.len(), 4);
        assert!(!b.with_replacement);
        assert_eq!(b.leftover_normals, 0);
        let mut seen_normals = Vec::new();
        for set in &b.sets {
            assert_eq!(set.n_samples(), 200);
            assert_eq!(set.attack_count(), 100);
            assert_eq!(set.normal_count(), 100);
            for r in 0..set.n_samples() {
                if set.labels()[r] == 0 {
                    seen_normals.push(set.features().get(r, 0) as i64);
                }
            }
        }
        seen_normals.sort_unstable();
        let before = seen_normals.len();
        seen_normals.dedup();
        assert_eq!(before, seen_normals.len(), "normal chunks must be disjoint");
    }

    #[test]
    fn balanced_sets_with_replacement() {
        let d = toy(100, 100);
        let b = make_balanced_sets(&d, 4, 7, false).unwrap();
        assert!(b.with_replacement);
        for set in &b.sets {
            assert_eq!(set.attack_count(), 100);
            assert_eq!(set.normal_count(), 100);
        }
    }

    #[test]
    fn balanced_sets_k1_is_whole_training_data() {
        let d = toy(100, 100);
        let b = make_balanced_sets(&d, 1, 7, false).unwrap();
        assert_eq!(b.sets.len(), 1);
        let set = &b.sets[0];
        assert_eq!(set.n_samples(), 200);
        let mut ids: Vec<i64> = (0..set.n_samples()).map(|r| set.features().get(r, 0) as i64).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..200).collect::<Vec<i64>>());
    }

    #[test]
    fn balanced_sets_leftover_recorded() {
        let d = toy(450, 100);
        let b = make_balanced_sets(&d, 4, 7, false).unwrap();
        assert_eq!(b.leftover_normals, 50);
    }

    #[test]
    fn subsample_examples() {
        let d = toy(100, 1000);
        let out = subsample_attacks(&d, 0.1, 3);
        assert_eq!(out.attack_count(), 100);
        assert_eq!(out.normal_count(), 100);

        let id = subsample_attacks(&d, 1.0, 3);
        assert_eq!(id, d);

        let d = toy(10, 7);
        let out = subsample_attacks(&d, 0.5, 3);
        assert_eq!(out.attack_count(), 4); // ceil(3.5)
    }

    #[test]
    fn subsample_preserves_normals_and_is_deterministic() {
        let d = toy(50, 40);
        let a = subsample_attacks(&d, 0.3, 9);
        let b = subsample_attacks(&d, 0.3, 9);
        assert_eq!(a, b);
        let normals_before: Vec<f64> = (0..d.n_samples())
            .filter(|&i| d.labels()[i] == 0)
            .map(|i| d.features().get(i, 0))
            .collect();
        let normals_after: Vec<f64> = (0..a.n_samples())
            .filter(|&i| a.labels()[i] == 0)
            .map(|i| a.features().get(i, 0))
            .collect();
        assert_eq!(normals_before, normals_after);
    }

    #[test]
    fn select_features_subset() {
        let d = toy(5, 5);
        let sub = d.select_features(&["b".to_string()]).unwrap();
        assert_eq!(sub.n_features(), 1);
        assert_eq!(sub.feature_names(), &["b".to_string()]);
        assert!(matches!(
            d.select_features(&["nope".to_string()]),
            Err(DatasetError::UnknownFeature(_))
        ));
    }

    proptest! {
        // Normalized values always land in [0, 1], including out-of-range test data.
        #[test]
        fn minmax_apply_bounded(vals in proptest::collection::vec(-1e6f64..1e6, 4..40)) {
            let half = vals.len() / 2;
            let train_rows: Vec<Vec<f64>> = vals[..half].iter().map(|&v| vec![v]).collect();
            let test_rows: Vec<Vec<f64>> = vals[half..].iter().map(|&v| vec![v]).collect();
            let train = Dataset::new(Matrix::from_rows(&train_rows), vec![0; half], vec!["x".into()]).unwrap();
            let test = Dataset::new(Matrix::from_rows(&test_rows), vec![0; vals.len() - half], vec!["x".into()]).unwrap();
            let p = minmax_fit(&train).unwrap();
            let out = minmax_apply(&p, &test).unwrap();
            for &v in out.features().data() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        // Balanced subsets are exactly 50/50 for any feasible (n_normal, n_attack, k).
        #[test]
        fn balanced_sets_always_balanced(n_normal in 1usize..120, n_attack in 1usize..60, k in 1usize..5, seed in 0u64..1000) {
            let d = toy(n_normal, n_attack);
            let b = make_balanced_sets(&d, k, seed, false).unwrap();
            for set in &b.sets {
                prop_assert_eq!(set.attack_count(), set.normal_count());
                prop_assert_eq!(set.attack_count(), n_attack);
            }
        }
    }
}
