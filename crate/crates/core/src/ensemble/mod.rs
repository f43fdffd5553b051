//! The balanced-representation ensemble, end to end: train autoencoder
//! branches on balanced subsets, train one DNN per branch on the learned
//! representations with the class-weighted loss, fuse every branch's
//! features into a super-vector and fit the final decision tree on the full
//! (imbalanced) training set.

mod experiment;

pub use experiment::{
    run_experiment, train_single, ExperimentReport, Method, MetricKind, RunRecord, TrainedRun,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    make_balanced_sets, minmax_apply, minmax_fit, Dataset, DatasetError, NormalizationParams,
};
use crate::matrix::Matrix;
use crate::metrics::{self, ConfusionMatrix, MetricsError, Scores};
use crate::neural::{
    train_autoencoder, train_mlp, AdamHyper, Loss, MlpModel, NeuralError, SaeModel, TrainOptions,
};
use crate::provenance::{self, Provenance};
use crate::rng::{derive, Stream};
use crate::trees::{fit_tree, predict_tree, TreeError, TreeHyper, TreeNode};

/// The normal-class loss weight is the fixed benchmark; only the attack
/// weight `w_s` is configurable.
pub const W_L: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error("feature count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("branch outputs have inconsistent widths")]
    WidthMismatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("branch {branch}: {source}")]
    Branch { branch: usize, source: NeuralError },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Which branch features feed the decision tree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Final hidden-layer activations of each branch DNN.
    #[default]
    Hidden,
    /// Hidden activations plus each branch's output probability.
    HiddenPlusProb,
    /// Only the k output probabilities.
    ProbOnly,
}

/// Full pipeline configuration. Hashes of the canonical serialization are
/// embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub branches: usize,
    /// Encoder widths; the decoder mirrors them.
    pub sae_hidden: Vec<usize>,
    /// Branch DNN hidden widths (sigmoid output of width 1 is implied).
    pub dnn_hidden: Vec<usize>,
    pub fusion_mode: FusionMode,
    /// Attack-sample loss weight (`w_l` is fixed at 1).
    pub w_s: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    /// Split attacks disjointly across branches instead of sharing them.
    pub partition_attacks: bool,
    pub tree: TreeHyper,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            branches: 4,
            sae_hidden: vec![32, 16],
            dnn_hidden: vec![32, 16],
            fusion_mode: FusionMode::Hidden,
            w_s: 2.0,
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            dropout: 0.2,
            partition_attacks: false,
            tree: TreeHyper::default(),
            master_seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.branches < 1 {
            return Err(EnsembleError::InvalidConfig("branches must be >= 1".into()));
        }
        if self.sae_hidden.is_empty() || self.dnn_hidden.is_empty() {
            return Err(EnsembleError::InvalidConfig("hidden layer lists cannot be empty".into()));
        }
        if self.w_s < W_L {
            return Err(EnsembleError::InvalidConfig(format!(
                "w_s must be >= {W_L} (got {})",
                self.w_s
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(EnsembleError::InvalidConfig("dropout must lie in [0, 1)".into()));
        }
        if self.batch_size < 1 {
            return Err(EnsembleError::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(())
    }

    /// Canonical serialization for hashing (JSON: field order is the struct
    /// order and u64 seeds survive untruncated).
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        provenance::config_hash(&self.canonical())
    }

    fn train_options(&self, seed: u64) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamHyper { learning_rate: self.learning_rate, ..Default::default() },
            seed,
        }
    }
}

/// One ensemble branch: representation learner plus classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub sae: SaeModel,
    pub dnn: MlpModel,
}

impl Branch {
    /// Per-branch fusion features for already-normalized rows.
    fn output(&self, x: &Matrix) -> Result<BranchOutput, NeuralError> {
        let repr = self.sae.encode(x)?;
        let (prob, hidden) = self.dnn.forward_inference(&repr)?;
        Ok(BranchOutput { hidden, prob })
    }
}

/// Final hidden activations and output probability of one branch.
#[derive(Clone, Debug)]
pub struct BranchOutput {
    pub hidden: Matrix,
    pub prob: Matrix,
}

/// Concatenates per-branch features into super-vector rows, branch 0 first.
pub fn fuse(outputs: &[BranchOutput], mode: FusionMode) -> Result<Matrix, EnsembleError> {
    let first = outputs.first().ok_or(EnsembleError::WidthMismatch)?;
    let n = first.prob.rows();
    for o in outputs {
        if o.prob.rows() != n
            || o.hidden.rows() != n
            || o.hidden.cols() != first.hidden.cols()
            || o.prob.cols() != first.prob.cols()
        {
            return Err(EnsembleError::WidthMismatch);
        }
    }
    let mut fused: Option<Matrix> = None;
    for o in outputs {
        let block = match mode {
            FusionMode::Hidden => o.hidden.clone(),
            FusionMode::HiddenPlusProb => o.hidden.hstack(&o.prob),
            FusionMode::ProbOnly => o.prob.clone(),
        };
        fused = Some(match fused {
            None => block,
            Some(acc) => acc.hstack(&block),
        });
    }
    Ok(fused.expect("at least one branch"))
}

/// The trained artifact: normalization, k branches, fusion mode, tree.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleModel {
    pub normalization: NormalizationParams,
    pub branches: Vec<Branch>,
    pub fusion_mode: FusionMode,
    pub w_s: f64,
    pub tree: TreeNode,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.normalization.min.len()
    }

    /// Super-vector width `k * w` for the stored fusion mode.
    pub fn super_vector_width(&self) -> usize {
        let w = match self.fusion_mode {
            FusionMode::Hidden => self.branch_hidden_width(),
            FusionMode::HiddenPlusProb => self.branch_hidden_width() + 1,
            FusionMode::ProbOnly => 1,
        };
        self.branches.len() * w
    }

    fn branch_hidden_width(&self) -> usize {
        let dnn = &self.branches[0].dnn;
        if dnn.layers.len() >= 2 {
            dnn.layers[dnn.layers.len() - 2].out_dim()
        } else {
            dnn.input_dim()
        }
    }

    /// Normalizes rows with the stored parameters and concatenates every
    /// branch's fusion features.
    pub fn build_super_vector(&self, data: &Dataset) -> Result<Matrix, EnsembleError> {
        if data.n_features() != self.n_features() {
            return Err(EnsembleError::DimensionMismatch {
                expected: self.n_features(),
                got: data.n_features(),
            });
        }
        let norm = minmax_apply(&self.normalization, data)?;
        let outputs = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| {
                b.output(norm.features())
                    .map_err(|source| EnsembleError::Branch { branch: i, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sv = fuse(&outputs, self.fusion_mode)?;
        debug_assert_eq!(sv.cols(), self.super_vector_width());
        Ok(sv)
    }
}

/// Trains the full pipeline on `train` (raw, unnormalized).
pub fn train_pipeline(
    train: &Dataset,
    config: &PipelineConfig,
) -> Result<EnsembleModel, EnsembleError> {
    config.validate()?;
    if train.n_samples() == 0 {
        return Err(EnsembleError::EmptyDataset);
    }
    if train.attack_count() == 0 || train.normal_count() == 0 {
        return Err(EnsembleError::SingleClassDataset);
    }

    let normalization = minmax_fit(train)?;
    let norm_train = minmax_apply(&normalization, train)?;
    let balanced = make_balanced_sets(
        &norm_train,
        config.branches,
        config.master_seed,
        config.partition_attacks,
    )?;

    let d = train.n_features();
    let mut branches = Vec::with_capacity(config.branches);
    for (i, set) in balanced.sets.iter().enumerate() {
        let sae_seed = derive(config.master_seed, Stream::Branch, 2 * i as u64);
        let dnn_seed = derive(config.master_seed, Stream::Branch, 2 * i as u64 + 1);
        let wrap = |source: NeuralError| EnsembleError::Branch { branch: i, source };

        let mut sae = SaeModel::new(d, &config.sae_hidden, config.dropout, sae_seed);
        train_autoencoder(&mut sae, set.features(), &config.train_options(sae_seed))
            .map_err(wrap)?;

        let repr = sae.encode(set.features()).map_err(wrap)?;
        let mut dnn =
            MlpModel::classifier(repr.cols(), &config.dnn_hidden, config.dropout, dnn_seed);
        let targets =
            Matrix::from_vec(set.n_samples(), 1, set.labels().iter().map(|&l| f64::from(l)).collect());
        train_mlp(
            &mut dnn,
            &repr,
            &targets,
            Loss::WeightedBce { w_s: config.w_s, w_l: W_L },
            &config.train_options(dnn_seed),
        )
        .map_err(wrap)?;
        branches.push(Branch { sae, dnn });
    }

    let mut model = EnsembleModel {
        normalization,
        branches,
        fusion_mode: config.fusion_mode,
        w_s: config.w_s,
        tree: TreeNode::Leaf { probability: 0.0, samples: 0 },
        feature_names: train.feature_names().to_vec(),
        provenance: Provenance {
            master_seed: config.master_seed,
            config_hash: config.hash(),
            source_fingerprint: String::new(),
            train_fingerprint: provenance::dataset_fingerprint(train),
            split: None,
            with_replacement: balanced.with_replacement,
            leftover_normals: balanced.leftover_normals as u64,
        },
    };

    // The tree sees the full imbalanced training set through every branch,
    // so its leaves are calibrated on realistic class priors.
    let sv = model.build_super_vector(train)?;
    model.tree = fit_tree(&sv, train.labels(), &config.tree);
    Ok(model)
}

/// Labels and attack probabilities for raw (unnormalized) rows.
pub fn predict(model: &EnsembleModel, data: &Dataset) -> Result<(Vec<u8>, Vec<f64>), EnsembleError> {
    let sv = model.build_super_vector(data)?;
    let (probs, labels) = predict_tree(&model.tree, &sv)?;
    Ok((labels, probs))
}

/// Predicts and scores against the dataset's labels.
pub fn evaluate(
    model: &EnsembleModel,
    test: &Dataset,
) -> Result<(Scores, ConfusionMatrix), EnsembleError> {
    if test.n_samples() == 0 {
        return Err(EnsembleError::EmptyDataset);
    }
    let (labels, _) = predict(model, test)?;
    let cm = metrics::confusion(&labels, test.labels())?;
    Ok((metrics::compute(&cm)?, cm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    /// Small separable synthetic: normals near the origin, attacks offset.
    pub(crate) fn blob_dataset(n_normal: usize, n_attack: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_normal + n_attack {
            let attack = i >= n_normal;
            let center = if attack { 0.75 } else { 0.25 };
            rows.push(vec![
                center + rng.gen_range(-0.15..0.15),
                center + rng.gen_range(-0.15..0.15),
                rng.gen_range(0.0..1.0),
            ]);
            labels.push(u8::from(attack));
        }
        Dataset::new(
            Matrix::from_rows(&rows),
            labels,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    fn fast_config(branches: usize) -> PipelineConfig {
        PipelineConfig {
            branches,
            sae_hidden: vec![8, 4],
            dnn_hidden: vec![8, 4],
            epochs: 15,
            batch_size: 32,
            ..Default::default()
        }
    }

    #[test]
    fn super_vector_width_contract() {
        let data = blob_dataset(300, 60, 1);
        let config = PipelineConfig { epochs: 2, ..PipelineConfig::default() };
        let model = train_pipeline(&data, &config).unwrap();
        assert_eq!(model.super_vector_width(), 4 * 16);
        let sv = model.build_super_vector(&data).unwrap();
        assert_eq!(sv.cols(), 64);
        assert_eq!(sv.rows(), 360);
    }

    #[test]
    fn fusion_modes_change_width() {
        let data = blob_dataset(200, 50, 2);
        for (mode, expect) in [
            (FusionMode::Hidden, 2 * 4),
            (FusionMode::HiddenPlusProb, 2 * 5),
            (FusionMode::ProbOnly, 2),
        ] {
            let config =
                PipelineConfig { fusion_mode: mode, epochs: 2, ..fast_config(2) };
            let model = train_pipeline(&data, &config).unwrap();
            assert_eq!(model.super_vector_width(), expect, "{mode:?}");
            let sv = model.build_super_vector(&data).unwrap();
            assert_eq!(sv.cols(), expect);
        }
    }

    #[test]
    fn fuse_block_order_via_sentinel() {
        // Branch 1 produces a constant sentinel; its block must occupy the
        // second slot of the fused row.
        let n = 3;
        let a = BranchOutput {
            hidden: Matrix::from_vec(n, 2, vec![0.1; 6]),
            prob: Matrix::from_vec(n, 1, vec![0.5; 3]),
        };
        let sentinel = BranchOutput {
            hidden: Matrix::from_vec(n, 2, vec![9.0; 6]),
            prob: Matrix::from_vec(n, 1, vec![1.0; 3]),
        };
        let fused = fuse(&[a.clone(), sentinel], FusionMode::Hidden).unwrap();
        assert_eq!(fused.row(0), &[0.1, 0.1, 9.0, 9.0]);
        let fused = fuse(&[a, BranchOutput {
            hidden: Matrix::from_vec(n, 2, vec![9.0; 6]),
            prob: Matrix::from_vec(n, 1, vec![1.0; 3]),
        }], FusionMode::HiddenPlusProb).unwrap();
        assert_eq!(fused.row(0), &[0.1, 0.1, 0.5, 9.0, 9.0, 1.0]);
    }

    #[test]
    fn fuse_width_mismatch_detected() {
        let a = BranchOutput {
            hidden: Matrix::zeros(2, 3),
            prob: Matrix::zeros(2, 1),
        };
        let b = BranchOutput {
            hidden: Matrix::zeros(2, 4),
            prob: Matrix::zeros(2, 1),
        };
        assert!(matches!(
            fuse(&[a, b], FusionMode::Hidden),
            Err(EnsembleError::WidthMismatch)
        ));
    }

    #[test]
    fn pipeline_learns_separable_data() {
        let data = blob_dataset(400, 100, 3);
        let model = train_pipeline(&data, &fast_config(2)).unwrap();
        let (scores, _) = evaluate(&model, &data).unwrap();
        assert!(scores.acc >= 0.99, "training accuracy {}", scores.acc);
    }

    #[test]
    fn duplicated_row_predicts_identically() {
        let data = blob_dataset(120, 40, 4);
        let model = train_pipeline(&data, &fast_config(1)).unwrap();
        let dup = data.select(&[0, 0]);
        let (labels, probs) = predict(&model, &dup).unwrap();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(probs[0], probs[1]);
    }

    #[test]
    fn k1_pipeline_equals_direct_composition() {
        let data = blob_dataset(150, 50, 5);
        let model = train_pipeline(&data, &fast_config(1)).unwrap();
        let (labels, _) = predict(&model, &data).unwrap();

        // Hand-rolled path: normalize, encode, DNN hidden, tree.
        let norm = minmax_apply(&model.normalization, &data).unwrap();
        let repr = model.branches[0].sae.encode(norm.features()).unwrap();
        let (_, hidden) = model.branches[0].dnn.forward_inference(&repr).unwrap();
        let (_, direct) = predict_tree(&model.tree, &hidden).unwrap();
        assert_eq!(labels, direct);
    }

    #[test]
    fn training_is_deterministic() {
        let data = blob_dataset(200, 60, 6);
        let a = train_pipeline(&data, &fast_config(2)).unwrap();
        let b = train_pipeline(&data, &fast_config(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_and_empty_rejected() {
        let empty = Dataset::new(Matrix::zeros(0, 2), vec![], vec!["a".into(), "b".into()]).unwrap();
        assert!(matches!(
            train_pipeline(&empty, &fast_config(1)),
            Err(EnsembleError::EmptyDataset)
        ));
        let single = Dataset::new(
            Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]),
            vec![0, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(
            train_pipeline(&single, &fast_config(1)),
            Err(EnsembleError::SingleClassDataset)
        ));
    }

    #[test]
    fn identical_branches_make_metrics_permutation_invariant() {
        // Clone one trained branch into three identical ones: permuting the
        // (identical) super-vector blocks and refitting the tree must not
        // change the evaluation.
        let data = blob_dataset(200, 60, 8);
        let config = fast_config(1);
        let base = train_pipeline(&data, &config).unwrap();
        let mut tripled = base.clone();
        tripled.branches = vec![
            base.branches[0].clone(),
            base.branches[0].clone(),
            base.branches[0].clone(),
        ];
        let sv = tripled.build_super_vector(&data).unwrap();
        let w = sv.cols() / 3;
        let permuted = {
            let block = |b: usize| (b * w..(b + 1) * w).collect::<Vec<_>>();
            let order: Vec<usize> =
                block(2).into_iter().chain(block(0)).chain(block(1)).collect();
            sv.select_cols(&order)
        };
        let tree_a = fit_tree(&sv, data.labels(), &config.tree);
        let tree_b = fit_tree(&permuted, data.labels(), &config.tree);
        let (_, la) = predict_tree(&tree_a, &sv).unwrap();
        let (_, lb) = predict_tree(&tree_b, &permuted).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn evaluate_perfect_predictions() {
        let data = blob_dataset(50, 50, 9);
        let model = train_pipeline(&data, &fast_config(1)).unwrap();
        let (scores, cm) = evaluate(&model, &data).unwrap();
        if cm.fp == 0 && cm.fn_ == 0 {
            assert_eq!((scores.acc, scores.prec, scores.rec, scores.f1), (1.0, 1.0, 1.0, 1.0));
        }
        assert_eq!(cm.total(), 100);
    }
}
