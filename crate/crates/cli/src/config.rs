//! Experiment files.
//!
//! ```toml
//! seeds = [0, 1, 2]
//!
//! [dataset]
//! kind = "synthetic"        # or "csv" with features/labels[/splits]
//! noise_sigma = 0.5
//!
//! [experiment]
//! init_mode = "WARM"
//! max_iterations = 10
//! initial_labeled = 20
//!
//! [query]
//! uncertainty = "MGE"
//! diversity = true
//! budget = 20
//! multiplier = 3
//!
//! [train]
//! epochs = 100
//!
//! [model]
//! hidden_layers = [32]
//! ```
//!
//! Overrides are `section.key=value` with a TOML value; bare words are read
//! as strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mlal_core::data::{generate_synthetic, load_csv, SyntheticConfig};
use mlal_core::engine::{ExperimentConfig, InitMode};
use mlal_core::nn::{ModelConfig, TrainConfig};
use mlal_core::query::QuerySpec;
use mlal_core::DatasetPool;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    Synthetic(SyntheticConfig),
    Csv {
        features: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        splits: Option<PathBuf>,
        #[serde(default)]
        split_seed: u64,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self::Synthetic(SyntheticConfig::default())
    }
}

impl DatasetSpec {
    /// Relative CSV paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<DatasetPool> {
        match self {
            Self::Synthetic(cfg) => Ok(generate_synthetic(cfg)?),
            Self::Csv {
                features,
                labels,
                splits,
                split_seed,
            } => {
                let splits = splits.as_ref().map(|p| base.join(p));
                Ok(load_csv(
                    &base.join(features),
                    &base.join(labels),
                    splits.as_deref(),
                    *split_seed,
                )?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub init_mode: InitMode,
    pub max_iterations: usize,
    pub target_labeled: Option<usize>,
    pub initial_labeled: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            init_mode: base.init_mode,
            max_iterations: base.max_iterations,
            target_labeled: base.target_labeled,
            initial_labeled: base.initial_labeled,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output subdirectory; defaults to the strategy name.
    pub label: Option<String>,
    pub seeds: Vec<u64>,
    pub dataset: DatasetSpec,
    pub experiment: ExperimentSection,
    pub query: QuerySpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![0]
        } else {
            self.seeds.clone()
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.query.label())
    }

    pub fn experiment(&self, seed: u64, oracle: bool) -> ExperimentConfig {
        ExperimentConfig {
            query: self.query.clone(),
            train: self.train.clone(),
            model: self.model.clone(),
            init_mode: self.experiment.init_mode,
            max_iterations: self.experiment.max_iterations,
            target_labeled: self.experiment.target_labeled,
            initial_labeled: self.experiment.initial_labeled,
            oracle,
            seed,
        }
        .with_seed(seed)
    }

    pub fn validate(&self) -> Result<()> {
        for seed in self.seeds() {
            self.experiment(seed, true)
                .validate()
                .map_err(|e| CliError::Data(format!("invalid config: {e}")))?;
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{spec}` is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("bad override key `{key}`")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_owned(), parse_value(raw.trim()));
    Ok(())
}

/// A `train.epochs` without explicit decay and detach epochs gets the
/// default schedule for that length instead of the one for 100 epochs.
fn rescale_schedule(doc: &mut toml::Table) {
    let Some(train) = doc.get_mut("train").and_then(toml::Value::as_table_mut) else {
        return;
    };
    let Some(epochs) = train
        .get("epochs")
        .and_then(toml::Value::as_integer)
        .filter(|e| *e >= 0)
    else {
        return;
    };
    let scaled = TrainConfig::scaled(epochs as usize);
    train
        .entry("lr_decay_epoch")
        .or_insert(toml::Value::Integer(scaled.lr_decay_epoch as i64));
    train
        .entry("grad_stop_epoch")
        .or_insert(toml::Value::Integer(scaled.grad_stop_epoch as i64));
}

/// Reads `path` (or an empty document), applies overrides in order and
/// deserializes.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    rescale_schedule(&mut doc);
    let config: RunConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Data(format!("invalid config: {e}")))?;
    config.validate()?;
    Ok(config)
}
