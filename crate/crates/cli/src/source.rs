//! Dataset acquisition: ARFF files, delimited files, or simulator runs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use icsdetect::dataset::Dataset;
use icsdetect::ingest::{parse_arff, parse_delimited, to_dataset, MissingPolicy, ParseOptions};
use icsdetect::simulator::{generate_dataset, AttackScenario};

#[derive(Args, Clone, Debug)]
pub struct SourceArgs {
    /// Dataset file (.arff parsed as ARFF, anything else as delimited text)
    #[arg(long, conflicts_with = "scenario")]
    pub dataset: Option<PathBuf>,

    /// Scenario file; telemetry is generated with the scenario's own seed
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    /// Force the dataset format
    #[arg(long, value_parser = ["arff", "csv"])]
    pub format: Option<String>,

    /// Field delimiter for delimited files
    #[arg(long, default_value = ",")]
    pub delimiter: char,

    /// Label column name (default: last column)
    #[arg(long)]
    pub label_column: Option<String>,

    /// Label value mapped to attack (=1)
    #[arg(long, default_value = "Attack")]
    pub positive_label: String,

    /// Drop rows containing missing values ('?') instead of failing
    #[arg(long)]
    pub drop_missing: bool,

    /// Comma-separated feature subset to keep (default: all columns)
    #[arg(long)]
    pub features: Option<String>,

    /// Override the scenario horizon
    #[arg(long)]
    pub horizon: Option<usize>,
}

impl SourceArgs {
    fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            label_column: self.label_column.clone(),
            positive_label: self.positive_label.clone(),
            missing: if self.drop_missing { MissingPolicy::DropRow } else { MissingPolicy::Reject },
        }
    }

    /// Loads (or generates) the dataset and returns it with a short
    /// description for report headers.
    pub fn load(&self) -> Result<(Dataset, String)> {
        let (mut ds, desc) = match (&self.dataset, &self.scenario) {
            (Some(path), None) => (self.load_file(path)?, path.display().to_string()),
            (None, Some(path)) => {
                let scenario = load_scenario(path)?;
                let horizon = self.horizon.unwrap_or(scenario.horizon);
                let ds = generate_dataset(&scenario, horizon, scenario.seed)
                    .with_context(|| format!("scenario {}", scenario.name))?;
                (ds, format!("scenario:{}", scenario.name))
            }
            _ => bail!("exactly one of --dataset or --scenario is required"),
        };
        if let Some(subset) = &self.features {
            let names: Vec<String> =
                subset.split(',').map(|s| s.trim().to_string()).collect();
            ds = ds.select_features(&names).context("feature subset")?;
        }
        Ok((ds, desc))
    }

    fn load_file(&self, path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read dataset {}", path.display()))?;
        let is_arff = match self.format.as_deref() {
            Some("arff") => true,
            Some(_) => false,
            None => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("arff")),
        };
        let options = self.parse_options();
        let table = if is_arff {
            parse_arff(&text, &options)
                .with_context(|| format!("ARFF parse ({})", path.display()))?
        } else {
            parse_delimited(&text, self.delimiter, None, &options)
                .with_context(|| format!("delimited parse ({})", path.display()))?
        };
        Ok(to_dataset(&table)?)
    }
}

pub fn load_scenario(path: &Path) -> Result<AttackScenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    AttackScenario::from_toml(&text).with_context(|| format!("scenario {}", path.display()))
}
