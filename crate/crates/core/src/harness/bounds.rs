//! Convergence-bound verification grid.
//!
//! Each cell runs one optimizer on a problem that declares `L`, `σ` and
//! `f_inf`, under the constant `η₀/√K` step size and radius `ρ₀/√K`, for
//! several run lengths `K`. The seed-averaged `(1/K) Σ ‖∇f(x_k)‖²` is
//! compared with the bound. Within the slack band above the bound a cell is
//! flagged rather than failed; single seeds above the bound are counted but
//! do not change the status.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::run_experiment;
use super::runlog::RunLog;
use crate::analysis::{
    empirical_avg_sq_grad, empirical_avg_sq_perturbed_grad, theorem1_bound, theorem1_perturbed_bound, BoundInputs,
};
use crate::error::{Error, Result};
use crate::optim::OptimizerSpec;
use crate::problems::{Problem, ProblemSpec};
use crate::rng::SeededRng;
use crate::schedule::ScheduleSpec;

fn default_slack() -> f64 {
    0.1
}

fn default_batch() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCell {
    pub name: String,
    pub problem: ProblemSpec,
    /// Its radius is replaced by `ρ₀/√K` for each run length.
    pub optimizer: OptimizerSpec,
    pub eta0: f64,
    pub rho0: f64,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsFile {
    pub cell: Vec<BoundCell>,
}

impl BoundsFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: BoundsFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if file.cell.is_empty() {
            return Err(Error::config("bounds file defines no cells"));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Pass,
    /// Above the bound but within the slack band.
    Flag,
    Fail,
    NotApplicable,
}

impl BoundStatus {
    fn judge(empirical: Option<f64>, bound: f64, slack: f64) -> Self {
        match empirical {
            Some(v) if v <= bound => BoundStatus::Pass,
            Some(v) if v <= (1.0 + slack) * bound => BoundStatus::Flag,
            _ => BoundStatus::Fail,
        }
    }

    /// Within the bound up to the slack band.
    pub fn acceptable(self) -> bool {
        matches!(self, BoundStatus::Pass | BoundStatus::Flag | BoundStatus::NotApplicable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub name: String,
    pub optimizer: String,
    pub k: usize,
    pub inputs: BoundInputs,
    pub slack: f64,
    pub seeds: usize,
    pub bound: f64,
    pub empirical: Option<f64>,
    pub status: BoundStatus,
    pub perturbed_bound: f64,
    pub perturbed_empirical: Option<f64>,
    pub perturbed_status: BoundStatus,
    /// Seeds whose own average exceeds the bound.
    pub seed_excursions: usize,
    pub diverged_seeds: Vec<u64>,
}

impl CellReport {
    pub fn raises_flag(&self) -> bool {
        self.status != BoundStatus::Pass
            || !matches!(self.perturbed_status, BoundStatus::Pass | BoundStatus::NotApplicable)
    }
}

impl BoundCell {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.seeds.is_empty() {
            return Err(Error::config(format!("{}: ks and seeds must be non-empty", self.name)));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(Error::config(format!("{}: seeds must be distinct", self.name)));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) && self.optimizer.rho().is_some() {
            return Err(Error::config(format!("{}: rho0 must be positive", self.name)));
        }
        if !(self.slack >= 0.0) {
            return Err(Error::config(format!("{}: slack must be >= 0", self.name)));
        }
        self.optimizer.validate()
    }

    fn experiment(&self, k: usize) -> ExperimentConfig {
        let sqrt_k = (k as f64).sqrt();
        ExperimentConfig {
            name: format!("{}-K{k}", self.name),
            problem: self.problem.clone(),
            optimizer: self.optimizer.with_rho(self.rho0 / sqrt_k),
            schedule: ScheduleSpec::Theorem1 { eta0: self.eta0, total_steps: k },
            epochs: 0,
            batch_size: self.batch_size,
            seeds: self.seeds.clone(),
            weight_decay: 0.0,
            record_full_gradient: true,
            steps_per_epoch: None,
            output_dir: None,
        }
    }
}

/// `(L, σ, f0, f_inf)` declared by the problem. `f0` is the largest start
/// value over the cell's seeds.
fn declared_constants(cell: &BoundCell, problem: &Problem) -> Result<(f64, f64, f64, f64)> {
    let oracle = problem.oracle(cell.batch_size)?;
    let missing = |what: &str| Error::config(format!("{}: problem does not declare {what}", cell.name));
    let l = oracle.lipschitz_constant().ok_or_else(|| missing("a Lipschitz constant"))?;
    let sigma = oracle.noise_bound().ok_or_else(|| missing("a noise bound"))?;
    let f_inf = oracle.lower_bound().ok_or_else(|| missing("a lower bound"))?;
    let mut f0 = f64::NEG_INFINITY;
    for seed in &cell.seeds {
        let x0 = problem.initial_point(&mut SeededRng::new(*seed).fork(1));
        f0 = f0.max(oracle.loss(&x0)?);
    }
    Ok((l, sigma, f0, f_inf))
}

fn seed_excursions(logs: &[RunLog], bound: f64) -> usize {
    logs.iter()
        .filter(|l| {
            let n = l.full_grad_sq.len().max(1) as f64;
            l.full_grad_sq.iter().sum::<f64>() / n > bound
        })
        .count()
}

/// Runs one cell for every `K`, returning one report per `K` and the logs.
pub fn run_bound_cell(cell: &BoundCell) -> Result<Vec<(CellReport, Vec<RunLog>)>> {
    cell.validate()?;
    let problem = Problem::build(&cell.problem)?;
    let (l, sigma, f0, f_inf) = declared_constants(cell, &problem)?;
    let mut out = Vec::new();
    for &k in &cell.ks {
        let cfg = cell.experiment(k);
        if !cfg.schedule.satisfies_stepsize_condition(l) {
            return Err(Error::config(format!(
                "{}: eta0/sqrt(K) = {} exceeds 2/(5L) = {}",
                cfg.name,
                cell.eta0 / (k as f64).sqrt(),
                2.0 / (5.0 * l)
            )));
        }
        let inputs = BoundInputs { lipschitz: l, sigma, rho0: cell.rho0, eta0: cell.eta0, f0, f_inf, k };
        let bound = theorem1_bound(&inputs)?;
        let perturbed_bound = theorem1_perturbed_bound(&inputs)?;
        let logs = run_experiment(&cfg)?;
        let diverged_seeds: Vec<u64> = logs.iter().filter(|l| l.divergence.is_some()).map(|l| l.seed).collect();
        let perturbs = cfg.optimizer.rho().is_some();
        let (empirical, perturbed_empirical) = if diverged_seeds.is_empty() {
            let e = empirical_avg_sq_grad(&logs, true)?;
            let p = if perturbs { Some(empirical_avg_sq_perturbed_grad(&logs)?) } else { None };
            (Some(e), p)
        } else {
            (None, None)
        };
        let perturbed_status = if perturbs {
            BoundStatus::judge(perturbed_empirical, perturbed_bound, cell.slack)
        } else {
            BoundStatus::NotApplicable
        };
        let report = CellReport {
            name: cell.name.clone(),
            optimizer: cfg.optimizer.name().to_string(),
            k,
            inputs,
            slack: cell.slack,
            seeds: logs.len(),
            bound,
            empirical,
            status: BoundStatus::judge(empirical, bound, cell.slack),
            perturbed_bound,
            perturbed_empirical,
            perturbed_status,
            seed_excursions: seed_excursions(&logs, bound),
            diverged_seeds,
        };
        out.push((report, logs));
    }
    Ok(out)
}

pub fn run_bounds_grid(file: &BoundsFile) -> Result<Vec<CellReport>> {
    let mut reports = Vec::new();
    for cell in &file.cell {
        reports.extend(run_bound_cell(cell)?.into_iter().map(|(r, _)| r));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CELL: &str = r#"
[[cell]]
name = "q"
eta0 = 1.0
rho0 = 0.5
ks = [25, 100]
seeds = [1, 2, 3]
problem = { kind = "quadratic", dim = 4, eig_min = 0.2, eig_max = 1.0, noise_sigma = 0.1, seed = 5 }
optimizer = { kind = "samar", rho = 1.0 }
"#;

    #[test]
    fn small_grid_passes() {
        let file = BoundsFile::parse(CELL).unwrap();
        let reports = run_bounds_grid(&file).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.status, BoundStatus::Pass, "{r:?}");
            assert_eq!(r.perturbed_status, BoundStatus::Pass, "{r:?}");
            assert!(r.empirical.unwrap() > 0.0);
        }
    }

    #[test]
    fn stepsize_condition_enforced() {
        let file = BoundsFile::parse(&CELL.replace("eta0 = 1.0", "eta0 = 5.0")).unwrap();
        assert!(matches!(run_bounds_grid(&file), Err(Error::Config(_))));
    }

    #[test]
    fn undeclared_constants_rejected() {
        let text = CELL.replace(
            r#"{ kind = "quadratic", dim = 4, eig_min = 0.2, eig_max = 1.0, noise_sigma = 0.1, seed = 5 }"#,
            r#"{ kind = "rosenbrock", dim = 2 }"#,
        );
        assert!(matches!(run_bounds_grid(&BoundsFile::parse(&text).unwrap()), Err(Error::Config(_))));
    }

    #[test]
    fn sgd_cell_has_no_perturbed_check() {
        let text = CELL.replace(r#"{ kind = "samar", rho = 1.0 }"#, r#"{ kind = "sgd" }"#);
        let reports = run_bounds_grid(&BoundsFile::parse(&text).unwrap()).unwrap();
        assert!(reports.iter().all(|r| r.perturbed_status == BoundStatus::NotApplicable));
    }

    #[test]
    fn status_bands() {
        assert_eq!(BoundStatus::judge(Some(1.0), 1.0, 0.1), BoundStatus::Pass);
        assert_eq!(BoundStatus::judge(Some(1.05), 1.0, 0.1), BoundStatus::Flag);
        assert_eq!(BoundStatus::judge(Some(1.2), 1.0, 0.1), BoundStatus::Fail);
        assert_eq!(BoundStatus::judge(None, 1.0, 0.1), BoundStatus::Fail);
    }
}
