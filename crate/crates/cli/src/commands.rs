//! Subcommand implementations. Every artifact carries the master seed and
//! the resolved config hash in a header, no command mutates its inputs, and
//! identical invocations write identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use icsdetect::dataset::{stratified_split, Dataset, SplitPlan};
use icsdetect::ensemble::{
    evaluate, run_experiment, train_single, ExperimentReport, MetricKind,
};
use icsdetect::metrics::{ConfusionMatrix, Scores};
use icsdetect::model_io;
use icsdetect::provenance::dataset_fingerprint;
use icsdetect::simulator::generate_dataset;

use crate::config::{parse_method_list, parse_ratio_list, FileConfig, Resolved};
use crate::source::{load_scenario, SourceArgs};

#[derive(Args, Clone, Debug)]
pub struct PipelineArgs {
    /// Config file (TOML); flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Master seed for splits and training
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of ensemble branches
    #[arg(long)]
    pub branches: Option<usize>,

    /// Super-vector content: hidden | hidden_plus_prob | prob_only
    #[arg(long)]
    pub fusion_mode: Option<String>,

    /// Partition attacks disjointly across branches instead of sharing them
    #[arg(long)]
    pub partition_attacks: bool,

    /// Stratified-split repetitions
    #[arg(long)]
    pub repetitions: Option<usize>,

    /// Held-out fraction per split
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut resolved = Resolved::from_file_config(file)?;
        if let Some(seed) = self.seed {
            resolved.override_seed(seed);
        }
        if let Some(branches) = self.branches {
            resolved.pipeline.branches = branches;
        }
        if let Some(mode) = &self.fusion_mode {
            resolved.pipeline.fusion_mode =
                match mode.replace('-', "_").to_ascii_lowercase().as_str() {
                    "hidden" => icsdetect::ensemble::FusionMode::Hidden,
                    "hidden_plus_prob" => icsdetect::ensemble::FusionMode::HiddenPlusProb,
                    "prob_only" => icsdetect::ensemble::FusionMode::ProbOnly,
                    other => bail!("unknown fusion mode `{other}`"),
                };
        }
        if self.partition_attacks {
            resolved.pipeline.partition_attacks = true;
        }
        if let Some(reps) = self.repetitions {
            resolved.split.repetitions = reps;
        }
        if let Some(frac) = self.test_fraction {
            anyhow::ensure!(frac > 0.0 && frac < 1.0, "test fraction must lie in (0, 1)");
            resolved.split.test_fraction = frac;
        }
        Ok(resolved)
    }
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file
    #[arg(long)]
    pub scenario: PathBuf,

    /// Override the scenario's embedded generation seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Override the scenario horizon
    #[arg(long)]
    pub horizon: Option<usize>,

    /// Output dataset file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let horizon = args.horizon.unwrap_or(scenario.horizon);
    let ds = generate_dataset(&scenario, horizon, seed)?;
    let header = format!(
        "# seed={} config_hash={} scenario={} horizon={}\n",
        seed,
        icsdetect::provenance::config_hash(&scenario.to_toml()),
        scenario.name,
        horizon
    );
    write_text(&args.out, &format!("{}{}", header, ds.export_delimited(',')))?;
    println!(
        "wrote {} rows ({} attack, {} normal) to {}",
        ds.n_samples(),
        ds.attack_count(),
        ds.normal_count(),
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- train

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Output directory (model.bin, report.csv, report.json)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PhaseRow {
    split: &'static str,
    acc: f64,
    prec: f64,
    rec: f64,
    f1: f64,
    confusion: Option<ConfusionMatrix>,
}

#[derive(Serialize)]
struct TrainReport {
    seed: u64,
    config_hash: String,
    dataset: String,
    records: Vec<PhaseRow>,
    with_replacement: bool,
    leftover_normals: u64,
}

fn phase_csv(seed: u64, hash: &str, rows: &[(&'static str, Scores, Option<ConfusionMatrix>)]) -> String {
    let mut out = format!("# seed={} config_hash={}\nsplit,acc,prec,rec,f1,tp,fp,fn,tn\n", seed, hash);
    for (name, s, cm) in rows {
        let (tp, fp, fn_, tn) = cm.map_or((0, 0, 0, 0), |c| (c.tp, c.fp, c.fn_, c.tn));
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{},{},{},{}\n",
            name, s.acc, s.prec, s.rec, s.f1, tp, fp, fn_, tn
        ));
    }
    out
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let resolved = args.pipeline.resolve()?;
    let (data, desc) = args.source.load()?;
    let run = train_single(&data, &resolved.split, 0, &resolved.pipeline)?;
    out_dir(&args.out)?;
    model_io::save_ensemble(&args.out.join("model.bin"), &run.model)?;

    let hash = resolved.hash();
    let seed = resolved.pipeline.master_seed;
    let rows = [
        ("train", run.train_scores, None),
        ("test", run.test_scores, Some(run.test_confusion)),
    ];
    write_text(&args.out.join("report.csv"), &phase_csv(seed, &hash, &rows))?;
    let report = TrainReport {
        seed,
        config_hash: hash,
        dataset: desc,
        records: rows
            .iter()
            .map(|(name, s, cm)| PhaseRow {
                split: name,
                acc: s.acc,
                prec: s.prec,
                rec: s.rec,
                f1: s.f1,
                confusion: *cm,
            })
            .collect(),
        with_replacement: run.model.provenance.with_replacement,
        leftover_normals: run.model.provenance.leftover_normals,
    };
    write_text(
        &args.out.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!(
        "model written to {}; test F1 {:.4}",
        args.out.join("model.bin").display(),
        run.test_scores.f1
    );
    Ok(())
}

// -------------------------------------------------------------------- eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub source: SourceArgs,

    /// Evaluate on the whole dataset or reproduce the model's training-time
    /// split: all | train | test
    #[arg(long, default_value = "all", value_parser = ["all", "train", "test"])]
    pub split: String,

    /// Output directory (eval_report.csv, eval_report.json)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model = model_io::load_ensemble(&args.model)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    let (data, desc) = args.source.load()?;

    let (eval_data, split_name): (Dataset, &'static str) = match args.split.as_str() {
        "all" => (data, "all"),
        which => {
            let split_ref = model.provenance.split.context(
                "model carries no split provenance; evaluate with --split all",
            )?;
            if !model.provenance.source_fingerprint.is_empty()
                && dataset_fingerprint(&data) != model.provenance.source_fingerprint
            {
                bail!(
                    "dataset fingerprint does not match the model's source; \
                     --split {which} needs the original dataset"
                );
            }
            let plan = SplitPlan {
                seed: split_ref.seed,
                test_fraction: split_ref.test_fraction,
                repetitions: split_ref.repetitions as usize,
            };
            let (train, test) = stratified_split(&data, &plan, split_ref.repetition as usize)?;
            if which == "train" {
                (train, "train")
            } else {
                (test, "test")
            }
        }
    };

    let (scores, cm) = evaluate(&model, &eval_data)?;
    out_dir(&args.out)?;
    let seed = model.provenance.master_seed;
    let hash = model.provenance.config_hash.clone();
    let rows = [(split_name, scores, Some(cm))];
    write_text(&args.out.join("eval_report.csv"), &phase_csv(seed, &hash, &rows))?;
    let report = TrainReport {
        seed,
        config_hash: hash,
        dataset: desc,
        records: rows
            .iter()
            .map(|(name, s, c)| PhaseRow {
                split: name,
                acc: s.acc,
                prec: s.prec,
                rec: s.rec,
                f1: s.f1,
                confusion: *c,
            })
            .collect(),
        with_replacement: model.provenance.with_replacement,
        leftover_normals: model.provenance.leftover_normals,
    };
    write_text(
        &args.out.join("eval_report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!("{} rows evaluated; F1 {:.4}", eval_data.n_samples(), scores.f1);
    Ok(())
}

// ------------------------------------------------------------------- sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Comma-separated imbalance ratios in (0, 1]
    #[arg(long)]
    pub ratios: Option<String>,

    /// Comma-separated methods: proposed,dt,rf,adaboost,dnn
    #[arg(long)]
    pub methods: Option<String>,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

fn resolve_lists(
    resolved: &mut Resolved,
    ratios: &Option<String>,
    methods: &Option<String>,
) -> Result<()> {
    if let Some(r) = ratios {
        resolved.ratios = parse_ratio_list(r)?;
    }
    if let Some(m) = methods {
        resolved.methods = parse_method_list(m)?;
    }
    Ok(())
}

fn write_experiment(dir: &Path, report: &ExperimentReport) -> Result<()> {
    write_text(&dir.join("records.csv"), &report.to_delimited())?;
    write_text(&dir.join("records.json"), &report.to_json())?;
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut resolved = args.pipeline.resolve()?;
    resolve_lists(&mut resolved, &args.ratios, &args.methods)?;
    let (data, _) = args.source.load()?;
    let report = run_experiment(
        &data,
        &resolved.split,
        &resolved.pipeline,
        &resolved.ratios,
        &resolved.methods,
    )?;
    out_dir(&args.out)?;
    write_experiment(&args.out, &report)?;
    for metric in MetricKind::ALL {
        let table = report.metric_table(metric, &resolved.ratios, &resolved.methods);
        write_text(&args.out.join(format!("table_{}.csv", metric.name())), &table)?;
    }
    println!(
        "{} records over {} ratios x {} methods x {} repetitions -> {}",
        report.records.len(),
        resolved.ratios.len(),
        resolved.methods.len(),
        resolved.split.repetitions,
        args.out.display()
    );
    Ok(())
}

// ----------------------------------------------------------------- compare

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Comma-separated methods: proposed,dt,rf,adaboost,dnn
    #[arg(long)]
    pub methods: Option<String>,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let mut resolved = args.pipeline.resolve()?;
    resolve_lists(&mut resolved, &None, &args.methods)?;
    let (data, _) = args.source.load()?;
    let report =
        run_experiment(&data, &resolved.split, &resolved.pipeline, &[1.0], &resolved.methods)?;
    out_dir(&args.out)?;
    write_experiment(&args.out, &report)?;
    let table = report.compare_table(1.0, &resolved.methods);
    write_text(&args.out.join("compare.csv"), &table)?;
    print!("{}", table);
    Ok(())
}

// ------------------------------------------------------------------ export

#[derive(Args, Debug)]
pub struct ExportBranchArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,

    /// Branch index
    #[arg(long, default_value_t = 0)]
    pub branch: usize,

    /// Output directory (sae.bin, dnn.bin)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_export_branch(args: &ExportBranchArgs) -> Result<()> {
    let model = model_io::load_ensemble(&args.model)?;
    let branch = model
        .branches
        .get(args.branch)
        .with_context(|| format!("model has {} branches", model.branches.len()))?;
    out_dir(&args.out)?;
    fs::write(args.out.join("sae.bin"), model_io::mlp_to_bytes(&branch.sae.net))?;
    fs::write(args.out.join("dnn.bin"), model_io::mlp_to_bytes(&branch.dnn))?;
    println!("branch {} exported to {}", args.branch, args.out.display());
    Ok(())
}
