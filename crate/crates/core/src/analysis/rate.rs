//! Seed-averaged gradient statistics and log-log rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RunLog;

fn check_logs(logs: &[RunLog]) -> Result<()> {
    let first = logs.first().ok_or_else(|| Error::contract("no run logs given"))?;
    if let Some(other) = logs.iter().find(|l| l.config_key != first.config_key) {
        return Err(Error::contract(format!(
            "logs mix configurations `{}` and `{}`",
            first.config_key, other.config_key
        )));
    }
    if let Some(bad) = logs.iter().find(|l| l.divergence.is_some()) {
        return Err(Error::contract(format!("run with seed {} diverged", bad.seed)));
    }
    Ok(())
}

fn seed_mean(logs: &[RunLog], series: impl Fn(&RunLog) -> Result<Vec<f64>>) -> Result<f64> {
    check_logs(logs)?;
    let mut total = 0.0;
    for log in logs {
        let values = series(log)?;
        if values.is_empty() {
            return Err(Error::contract(format!("run with seed {} has no steps", log.seed)));
        }
        total += values.iter().sum::<f64>() / values.len() as f64;
    }
    Ok(total / logs.len() as f64)
}

/// Mean over seeds of `(1/K) Σ_k ‖∇f(x_k)‖²`. With `use_full_gradient`
/// unset, the recorded stochastic gradient norms stand in for `∇f`.
pub fn empirical_avg_sq_grad(logs: &[RunLog], use_full_gradient: bool) -> Result<f64> {
    seed_mean(logs, |log| {
        if use_full_gradient {
            if log.full_grad_sq.len() != log.steps.len() {
                return Err(Error::contract(format!("seed {}: full gradients were not recorded", log.seed)));
            }
            Ok(log.full_grad_sq.clone())
        } else {
            Ok(log.steps.iter().map(|s| s.grad_norm * s.grad_norm).collect())
        }
    })
}

/// Mean over seeds of `(1/K) Σ_k ‖∇f(x_k + eps_k)‖²`.
pub fn empirical_avg_sq_perturbed_grad(logs: &[RunLog]) -> Result<f64> {
    seed_mean(logs, |log| {
        if log.perturbed_full_grad_sq.len() != log.steps.len() {
            return Err(Error::contract(format!("seed {}: perturbed full gradients were not recorded", log.seed)));
        }
        Ok(log.perturbed_full_grad_sq.clone())
    })
}

/// Running minimum of a series.
pub fn min_so_far(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::INFINITY, |m, v| {
            *m = m.min(*v);
            Some(*m)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln K, ln value)`.
pub fn fit_rate(ks: &[usize], values: &[f64]) -> Result<RateFit> {
    if ks.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: ks.len(), found: values.len() });
    }
    let mut distinct = ks.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct[0] == 0 {
        return Err(Error::contract("rate fit needs at least 3 distinct positive K values"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::contract(format!("rate fit needs positive values, got {v}")));
    }
    let xs: Vec<f64> = ks.iter().map(|k| (*k as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit { ks: ks.to_vec(), values: values.to_vec(), slope, intercept, r_squared })
}
