//! Run configuration: TOML config file plus flag overrides, resolved into
//! the exact settings a command runs with. The resolved form is hashed and
//! embedded in every artifact header.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use icsdetect::dataset::SplitPlan;
use icsdetect::ensemble::{Method, PipelineConfig};
use icsdetect::provenance;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub ratios: Vec<f64>,
    pub methods: Vec<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            ratios: (1..=10).map(|i| i as f64 / 10.0).collect(),
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
        }
    }
}

/// On-disk config layout.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    pub split: SplitPlan,
    pub experiment: ExperimentSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("config parse ({})", path.display()))
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub split: SplitPlan,
    pub ratios: Vec<f64>,
    pub methods: Vec<Method>,
}

impl Resolved {
    pub fn from_file_config(file: FileConfig) -> Result<Self> {
        let methods = file
            .experiment
            .methods
            .iter()
            .map(|s| {
                Method::parse(s).with_context(|| format!("unknown method `{s}` in config"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pipeline: file.pipeline,
            split: file.split,
            ratios: file.experiment.ratios,
            methods,
        })
    }

    /// One seed drives everything: splits and the training pipeline.
    pub fn override_seed(&mut self, seed: u64) {
        self.pipeline.master_seed = seed;
        self.split.seed = seed;
    }

    pub fn hash(&self) -> String {
        provenance::config_hash(&serde_json::to_string(self).expect("config serializes"))
    }
}

pub fn parse_ratio_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let v: f64 = p.trim().parse().with_context(|| format!("bad ratio `{p}`"))?;
            anyhow::ensure!(v > 0.0 && v <= 1.0, "ratio {v} outside (0, 1]");
            Ok(v)
        })
        .collect()
}

pub fn parse_method_list(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(|p| Method::parse(p.trim()).with_context(|| format!("unknown method `{p}`")))
        .collect()
}
