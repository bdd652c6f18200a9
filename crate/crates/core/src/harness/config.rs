use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::presets;
use crate::error::{Error, Result};
use crate::optim::OptimizerSpec;
use crate::problems::ProblemSpec;
use crate::schedule::ScheduleSpec;

fn default_batch_size() -> usize {
    256
}

/// One optimizer on one problem over a list of seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    /// Ignored by the `theorem1` schedule, whose run length is `K` steps.
    #[serde(default)]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub record_full_gradient: bool,
    /// Epoch length for problems without a dataset; defaults to the dimension.
    #[serde(default)]
    pub steps_per_epoch: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(format!("invalid experiment name `{}`", self.name)));
        }
        self.optimizer.validate()?;
        self.schedule.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config(format!("{}: seeds must be non-empty", self.name)));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::config(format!("{}: seeds must be distinct", self.name)));
        }
        if self.batch_size == 0 {
            return Err(Error::config(format!("{}: batch_size must be positive", self.name)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config(format!("{}: weight_decay must be >= 0", self.name)));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::config(format!("{}: steps_per_epoch must be positive", self.name)));
        }
        match &self.schedule {
            ScheduleSpec::Theorem1 { .. } => {}
            ScheduleSpec::CosineAnneal { total_epochs, .. } if *total_epochs < self.epochs => {
                return Err(Error::config(format!(
                    "{}: cosine schedule covers {total_epochs} epochs but the run has {}",
                    self.name, self.epochs
                )))
            }
            _ if self.epochs == 0 => {
                return Err(Error::config(format!("{}: epochs must be positive", self.name)))
            }
            _ => {}
        }
        Ok(())
    }

    /// Identifies this configuration apart from its seeds.
    pub fn config_key(&self) -> String {
        format!("{}/{}/{}", self.name, self.optimizer.name(), self.problem.label())
    }
}

/// A config file: a list of `[[experiment]]` tables. Each may name a
/// `preset`, whose values are filled in underneath the table's own keys.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentFile {
    pub experiments: Vec<ExperimentConfig>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, None)
    }

    /// Parses `text`, applying `preset` to every experiment that does not
    /// name its own.
    pub fn parse_with(text: &str, preset: Option<&str>) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        let mut experiments = Vec::new();
        if let Some(key) = doc.keys().find(|k| *k != "experiment") {
            return Err(Error::config(format!("unexpected top-level key `{key}`")));
        }
        let tables = match doc.get("experiment") {
            Some(toml::Value::Array(items)) => items.clone(),
            Some(_) => return Err(Error::config("`experiment` must be an array of tables")),
            None => Vec::new(),
        };
        for item in tables {
            let toml::Value::Table(mut table) = item else {
                return Err(Error::config("`experiment` entries must be tables"));
            };
            let named = match table.remove("preset") {
                Some(toml::Value::String(s)) => Some(s),
                Some(_) => return Err(Error::config("`preset` must be a string")),
                None => preset.map(str::to_string),
            };
            let merged = match named {
                Some(name) => {
                    let mut base = presets::preset_table(&name)?;
                    merge(&mut base, table);
                    base
                }
                None => table,
            };
            let cfg: ExperimentConfig =
                toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
            cfg.validate()?;
            experiments.push(cfg);
        }
        if experiments.is_empty() {
            return Err(Error::config("config file defines no experiments"));
        }
        let names: HashSet<_> = experiments.iter().map(|e| &e.name).collect();
        if names.len() != experiments.len() {
            return Err(Error::config("experiment names must be unique"));
        }
        Ok(Self { experiments })
    }

    pub fn load(path: &Path, preset: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with(&text, preset)
    }
}

/// Recursively overlays `top` onto `base`.
pub(crate) fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses a `1,2,3` seed list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let seeds = text
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| Error::config(format!("invalid seed `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    let distinct: HashSet<_> = seeds.iter().collect();
    if seeds.is_empty() || distinct.len() != seeds.len() {
        return Err(Error::config("seed list must be non-empty and distinct"));
    }
    Ok(seeds)
}
