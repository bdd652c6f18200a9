use serde::{Deserialize, Serialize};

use crate::optim::StepRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Full training loss at the end of the epoch.
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub train_top1: Option<f64>,
    pub test_top1: Option<f64>,
    pub train_top5: Option<f64>,
    pub test_top5: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceInfo {
    pub step: usize,
    pub loss: f64,
}

/// Everything recorded for one seed of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    /// Identifies the configuration apart from the seed; logs that share
    /// it may be averaged together.
    pub config_key: String,
    pub optimizer: String,
    pub problem: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    /// `‖∇f(x_k)‖²` per step, when full gradients were recorded.
    pub full_grad_sq: Vec<f64>,
    /// `‖∇f(x_k + eps_k)‖²` per step, for perturbing optimizers.
    pub perturbed_full_grad_sq: Vec<f64>,
    pub divergence: Option<DivergenceInfo>,
    /// Set when the run stopped at an exactly zero stochastic gradient.
    pub converged_early: bool,
    /// Steps skipped because the minibatch gradient vanished.
    #[serde(default)]
    pub skipped_steps: usize,
}

impl RunLog {
    pub fn new(config_key: String, optimizer: &str, problem: &str, seed: u64) -> Self {
        Self {
            config_key,
            optimizer: optimizer.to_string(),
            problem: problem.to_string(),
            seed,
            steps: Vec::new(),
            epochs: Vec::new(),
            full_grad_sq: Vec::new(),
            perturbed_full_grad_sq: Vec::new(),
            divergence: None,
            converged_early: false,
            skipped_steps: 0,
        }
    }
}
