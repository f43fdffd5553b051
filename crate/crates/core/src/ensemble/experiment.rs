//! Experiment harness: repeated stratified splits, imbalance-ratio sweeps,
//! baseline classifiers and report emission.
//!
//! The test split of each repetition is never normalized with its own
//! statistics, never subsampled and never touched by training; baselines
//! train on the same (normalized) imbalanced training data the pipeline
//! receives, which is exactly the contrast the sweep measures.

use serde::{Deserialize, Serialize};

use super::{evaluate, train_pipeline, EnsembleError, EnsembleModel, PipelineConfig};
use crate::dataset::{
    minmax_apply, minmax_fit, stratified_split, subsample_attacks, Dataset, SplitPlan,
};
use crate::matrix::Matrix;
use crate::metrics::{self, Aggregate, ConfusionMatrix, Scores};
use crate::neural::{train_mlp, AdamHyper, Loss, MlpModel, TrainOptions};
use crate::provenance::{dataset_fingerprint, SplitRef};
use crate::rng::{derive, Stream};
use crate::trees::{
    fit_adaboost, fit_random_forest, fit_tree, predict_adaboost, predict_forest, predict_tree,
    ForestConfig,
};

/// Classifiers the harness can run. `Proposed` is the ensemble pipeline;
/// the rest are single-model baselines trained on the raw imbalanced
/// training set, normalized identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Dt,
    Rf,
    Adaboost,
    Dnn,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Proposed, Method::Dt, Method::Rf, Method::Adaboost, Method::Dnn];

    pub fn parse(s: &str) -> Option<Method> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Some(Method::Proposed),
            "dt" => Some(Method::Dt),
            "rf" => Some(Method::Rf),
            "adaboost" => Some(Method::Adaboost),
            "dnn" => Some(Method::Dnn),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Dt => "dt",
            Method::Rf => "rf",
            Method::Adaboost => "adaboost",
            Method::Dnn => "dnn",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Acc,
    Prec,
    Rec,
    F1,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] =
        [MetricKind::Acc, MetricKind::Prec, MetricKind::Rec, MetricKind::F1];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Acc => "acc",
            MetricKind::Prec => "prec",
            MetricKind::Rec => "rec",
            MetricKind::F1 => "f1",
        }
    }

    pub fn pick(&self, s: &Scores) -> f64 {
        match self {
            MetricKind::Acc => s.acc,
            MetricKind::Prec => s.prec,
            MetricKind::Rec => s.rec,
            MetricKind::F1 => s.f1,
        }
    }
}

/// How the balanced sets were built in a proposed-pipeline run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalancingInfo {
    pub with_replacement: bool,
    pub leftover_normals: u64,
}

/// One (method, ratio, repetition) evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub ratio: f64,
    pub repetition: usize,
    pub acc: f64,
    pub prec: f64,
    pub rec: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balancing: Option<BalancingInfo>,
}

impl RunRecord {
    pub fn scores(&self) -> Scores {
        Scores { acc: self.acc, prec: self.prec, rec: self.rec, f1: self.f1 }
    }
}

/// All records of one experiment plus the provenance header fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub config_hash: String,
    pub records: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn aggregate(&self, method: Method, ratio: f64) -> Option<Aggregate> {
        let entries: Vec<Scores> = self
            .records
            .iter()
            .filter(|r| r.method == method && r.ratio == ratio)
            .map(RunRecord::scores)
            .collect();
        metrics::aggregate(&entries).ok()
    }

    pub fn mean_metric(&self, method: Method, ratio: f64, metric: MetricKind) -> Option<f64> {
        self.aggregate(method, ratio).map(|a| metric.pick(&a.mean))
    }

    /// Per-record delimited table (stable field order).
    pub fn to_delimited(&self) -> String {
        let mut out = format!(
            "# seed={} config_hash={}\nmethod,ratio,repetition,acc,prec,rec,f1,tp,fp,fn,tn\n",
            self.master_seed, self.config_hash
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{}\n",
                r.method,
                r.ratio,
                r.repetition,
                r.acc,
                r.prec,
                r.rec,
                r.f1,
                r.confusion.tp,
                r.confusion.fp,
                r.confusion.fn_,
                r.confusion.tn
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One figure-style table: rows are ratios, columns are methods, cells
    /// are the metric mean over repetitions.
    pub fn metric_table(&self, metric: MetricKind, ratios: &[f64], methods: &[Method]) -> String {
        let mut out = format!(
            "# seed={} config_hash={} metric={}\nratio",
            self.master_seed,
            self.config_hash,
            metric.name()
        );
        for m in methods {
            out.push_str(&format!(",{}", m));
        }
        out.push('\n');
        for &ratio in ratios {
            out.push_str(&format!("{}", ratio));
            for &m in methods {
                match self.mean_metric(m, ratio, metric) {
                    Some(v) => out.push_str(&format!(",{:.6}", v)),
                    None => out.push_str(","),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Comparison table: rows are methods, columns the four scores (means
    /// over repetitions, followed by std).
    pub fn compare_table(&self, ratio: f64, methods: &[Method]) -> String {
        let mut out = format!(
            "# seed={} config_hash={} ratio={}\nmethod,acc,prec,rec,f1,acc_std,prec_std,rec_std,f1_std\n",
            self.master_seed, self.config_hash, ratio
        );
        for &m in methods {
            if let Some(a) = self.aggregate(m, ratio) {
                out.push_str(&format!(
                    "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    m,
                    a.mean.acc,
                    a.mean.prec,
                    a.mean.rec,
                    a.mean.f1,
                    a.std.acc,
                    a.std.prec,
                    a.std.rec,
                    a.std.f1
                ));
            }
        }
        out
    }
}

/// Pipeline config specialized to one repetition cell: the cell seed is
/// derived from the master seed and the repetition index only, so the same
/// repetition trains identically whether it runs alone or inside a sweep.
pub fn cell_config(config: &PipelineConfig, repetition: usize) -> PipelineConfig {
    let mut cfg = config.clone();
    cfg.master_seed = derive(config.master_seed, Stream::Cell, repetition as u64);
    cfg
}

/// A model trained on one repetition's training split plus its evaluation
/// on the untouched test split.
pub struct TrainedRun {
    pub model: EnsembleModel,
    pub train_scores: Scores,
    pub test_scores: Scores,
    pub test_confusion: ConfusionMatrix,
}

/// Trains the proposed pipeline on repetition `repetition` of `plan` and
/// evaluates on the held-out split. The single entry point shared by the
/// `train` and `compare` commands, which keeps their numbers identical.
pub fn train_single(
    data: &Dataset,
    plan: &SplitPlan,
    repetition: usize,
    config: &PipelineConfig,
) -> Result<TrainedRun, EnsembleError> {
    let (train, test) = stratified_split(data, plan, repetition)?;
    let cfg = cell_config(config, repetition);
    let mut model = train_pipeline(&train, &cfg)?;
    model.provenance.source_fingerprint = dataset_fingerprint(data);
    model.provenance.split = Some(SplitRef {
        seed: plan.seed,
        test_fraction: plan.test_fraction,
        repetitions: plan.repetitions as u32,
        repetition: repetition as u32,
    });
    let (train_scores, _) = evaluate(&model, &train)?;
    let (test_scores, test_confusion) = evaluate(&model, &test)?;
    Ok(TrainedRun { model, train_scores, test_scores, test_confusion })
}

fn labels_to_targets(labels: &[u8]) -> Matrix {
    Matrix::from_vec(labels.len(), 1, labels.iter().map(|&l| f64::from(l)).collect())
}

fn baseline_scores(
    method: Method,
    train: &Dataset,
    test: &Dataset,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(Scores, ConfusionMatrix), EnsembleError> {
    // Baselines get the identical normalization treatment: fit on train,
    // apply (with clipping) to both sides.
    let params = minmax_fit(train)?;
    let norm_train = minmax_apply(&params, train)?;
    let norm_test = minmax_apply(&params, test)?;
    let x = norm_train.features();
    let y = norm_train.labels();

    let pred: Vec<u8> = match method {
        Method::Proposed => unreachable!("handled by the pipeline path"),
        Method::Dt => {
            let tree = fit_tree(x, y, &config.tree);
            predict_tree(&tree, norm_test.features())?.1
        }
        Method::Rf => {
            let forest_cfg = ForestConfig { tree: config.tree, ..Default::default() };
            let forest = fit_random_forest(x, y, &forest_cfg, seed)?;
            predict_forest(&forest, norm_test.features())?.1
        }
        Method::Adaboost => {
            let model = fit_adaboost(x, y, 100)?;
            predict_adaboost(&model, norm_test.features())?.1
        }
        Method::Dnn => {
            let mut dnn =
                MlpModel::classifier(x.cols(), &config.dnn_hidden, config.dropout, seed);
            let opts = TrainOptions {
                epochs: config.epochs,
                batch_size: config.batch_size,
                adam: AdamHyper { learning_rate: config.learning_rate, ..Default::default() },
                seed,
            };
            train_mlp(&mut dnn, x, &labels_to_targets(y), Loss::Bce, &opts)?;
            let (probs, _) = dnn.forward_inference(norm_test.features())?;
            probs.data().iter().map(|&p| u8::from(p >= 0.5)).collect()
        }
    };
    let cm = metrics::confusion(&pred, test.labels())?;
    Ok((metrics::compute(&cm)?, cm))
}

/// Runs every `(repetition, ratio, method)` cell: split, subsample the
/// training side only, train, evaluate on the untouched test split.
pub fn run_experiment(
    data: &Dataset,
    plan: &SplitPlan,
    config: &PipelineConfig,
    ratios: &[f64],
    methods: &[Method],
) -> Result<ExperimentReport, EnsembleError> {
    assert!(ratios.iter().all(|&r| r > 0.0 && r <= 1.0), "ratios must lie in (0, 1]");
    let mut records = Vec::with_capacity(plan.repetitions * ratios.len() * methods.len());
    for rep in 0..plan.repetitions {
        let (train, test) = stratified_split(data, plan, rep)?;
        for (ri, &ratio) in ratios.iter().enumerate() {
            let sub_seed =
                derive(config.master_seed, Stream::Subsample, ((rep as u64) << 32) | ri as u64);
            let sub = subsample_attacks(&train, ratio, sub_seed);
            for (mi, &method) in methods.iter().enumerate() {
                let (scores, confusion, balancing) = if method == Method::Proposed {
                    let cfg = cell_config(config, rep);
                    let model = train_pipeline(&sub, &cfg)?;
                    let (scores, cm) = evaluate(&model, &test)?;
                    let info = BalancingInfo {
                        with_replacement: model.provenance.with_replacement,
                        leftover_normals: model.provenance.leftover_normals,
                    };
                    (scores, cm, Some(info))
                } else {
                    let seed = derive(
                        config.master_seed,
                        Stream::Baseline,
                        ((rep as u64) << 32) | ((ri as u64) << 8) | mi as u64,
                    );
                    let (scores, cm) = baseline_scores(method, &sub, &test, config, seed)?;
                    (scores, cm, None)
                };
                records.push(RunRecord {
                    method,
                    ratio,
                    repetition: rep,
                    acc: scores.acc,
                    prec: scores.prec,
                    rec: scores.rec,
                    f1: scores.f1,
                    confusion,
                    balancing,
                });
            }
        }
    }
    Ok(ExperimentReport { master_seed: config.master_seed, config_hash: config.hash(), records })
}
