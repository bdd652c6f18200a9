//! Accuracy metrics aggregated across seeds.
//!
//! Per seed: the best test top-1 and top-5 over epochs, and the mean train
//! and test top-1 over the last ten epochs. Across seeds each metric is
//! reported as its maximum together with mean and sample standard
//! deviation. Diverged seeds are left out.

use serde::{Deserialize, Serialize};

use super::runlog::{EpochRecord, RunLog};
use crate::error::{Error, Result};

pub const LAST_WINDOW: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = mean(values);
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max), mean, std: var.sqrt() }
    }

    /// `max_{mean±std}` in percent.
    pub fn display_percent(&self) -> String {
        format!("{:.3}_{{{:.3}±{:.3}}}", 100.0 * self.max, 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub top1_max: f64,
    pub top5_max: f64,
    pub last10_top1_test: f64,
    pub last10_top1_train: f64,
    pub generalization_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub optimizer: String,
    pub problem: String,
    pub top1: Aggregate,
    pub top5: Aggregate,
    pub last10_top1_test: Aggregate,
    pub last10_top1_train: Aggregate,
    /// `mean` is exactly `last10_top1_train.mean − last10_top1_test.mean`.
    pub generalization_error: Aggregate,
    pub per_seed: Vec<SeedMetrics>,
}

impl MetricsSummary {
    pub fn top1_max(&self) -> f64 {
        self.top1.max
    }

    pub fn top5_max(&self) -> f64 {
        self.top5.max
    }
}

fn series(epochs: &[EpochRecord], seed: u64, pick: impl Fn(&EpochRecord) -> Option<f64>) -> Result<Vec<f64>> {
    epochs
        .iter()
        .map(|e| pick(e).ok_or_else(|| Error::contract(format!("seed {seed}: epoch {} has no accuracy", e.epoch))))
        .collect()
}

/// Running mean; exact on constant series.
fn mean(values: &[f64]) -> f64 {
    values.iter().enumerate().fold(0.0, |m, (i, v)| m + (v - m) / (i + 1) as f64)
}

fn window_mean(values: &[f64], window: usize) -> f64 {
    mean(&values[values.len() - window..])
}

pub fn compute_metrics(logs: &[RunLog]) -> Result<MetricsSummary> {
    compute_metrics_window(logs, LAST_WINDOW)
}

/// As [`compute_metrics`] with a custom trailing window.
pub fn compute_metrics_window(logs: &[RunLog], window: usize) -> Result<MetricsSummary> {
    let first = logs.first().ok_or_else(|| Error::contract("no run logs given"))?;
    if window == 0 {
        return Err(Error::contract("window must be positive"));
    }
    let mut per_seed = Vec::new();
    for log in logs.iter().filter(|l| l.divergence.is_none()) {
        if log.config_key != first.config_key {
            return Err(Error::contract("logs mix configurations"));
        }
        if log.epochs.len() < window {
            return Err(Error::contract(format!(
                "seed {}: {} epochs recorded, the last-{window} metrics need at least {window}",
                log.seed,
                log.epochs.len()
            )));
        }
        let test1 = series(&log.epochs, log.seed, |e| e.test_top1)?;
        let test5 = series(&log.epochs, log.seed, |e| e.test_top5)?;
        let train1 = series(&log.epochs, log.seed, |e| e.train_top1)?;
        let last_test = window_mean(&test1, window);
        let last_train = window_mean(&train1, window);
        per_seed.push(SeedMetrics {
            seed: log.seed,
            top1_max: test1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            top5_max: test5.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            last10_top1_test: last_test,
            last10_top1_train: last_train,
            generalization_error: last_train - last_test,
        });
    }
    if per_seed.is_empty() {
        return Err(Error::contract(format!("every seed of `{}` diverged", first.config_key)));
    }
    let collect = |f: fn(&SeedMetrics) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
    let last10_top1_test = Aggregate::of(&collect(|s| s.last10_top1_test));
    let last10_top1_train = Aggregate::of(&collect(|s| s.last10_top1_train));
    let mut generalization_error = Aggregate::of(&collect(|s| s.generalization_error));
    generalization_error.mean = last10_top1_train.mean - last10_top1_test.mean;
    Ok(MetricsSummary {
        optimizer: first.optimizer.clone(),
        problem: first.problem.clone(),
        top1: Aggregate::of(&collect(|s| s.top1_max)),
        top5: Aggregate::of(&collect(|s| s.top5_max)),
        last10_top1_test,
        last10_top1_train,
        generalization_error,
        per_seed,
    })
}
