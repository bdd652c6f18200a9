//! Learning-rate schedules.
//!
//! The cosine schedule is piecewise constant: every batch of an epoch sees
//! the same rate, and the rate decays across epochs to zero at
//! `total_epochs`. The `theorem1` schedule is the constant `η₀/√K` under
//! which the convergence bound is stated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    Constant { eta0: f64 },
    CosineAnneal { eta0: f64, total_epochs: usize },
    Theorem1 { eta0: f64, total_steps: usize },
}

impl ScheduleSpec {
    pub fn eta0(&self) -> f64 {
        match self {
            ScheduleSpec::Constant { eta0 }
            | ScheduleSpec::CosineAnneal { eta0, .. }
            | ScheduleSpec::Theorem1 { eta0, .. } => *eta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta0 = self.eta0();
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::config(format!("eta0 must be positive, got {eta0}")));
        }
        match self {
            ScheduleSpec::CosineAnneal { total_epochs: 0, .. } => Err(Error::config("cosine schedule needs total_epochs >= 1")),
            ScheduleSpec::Theorem1 { total_steps: 0, .. } => Err(Error::config("theorem1 schedule needs K >= 1")),
            _ => Ok(()),
        }
    }

    /// Whether `η₀/√K ≤ 2/(5L)`; only meaningful for the `theorem1` kind.
    pub fn satisfies_stepsize_condition(&self, lipschitz: f64) -> bool {
        match self {
            ScheduleSpec::Theorem1 { eta0, total_steps } => {
                eta0 / (*total_steps as f64).sqrt() <= 2.0 / (5.0 * lipschitz)
            }
            _ => false,
        }
    }
}

/// Learning rate for the given epoch. `global_step` is only consulted by
/// the `theorem1` schedule, which is indexed by step rather than epoch.
pub fn learning_rate(spec: &ScheduleSpec, epoch: usize, global_step: usize) -> Result<f64> {
    match spec {
        ScheduleSpec::Constant { eta0 } => Ok(*eta0),
        ScheduleSpec::CosineAnneal { eta0, total_epochs } => {
            if epoch >= *total_epochs {
                return Err(Error::contract(format!("epoch {epoch} out of range for {total_epochs} epochs")));
            }
            Ok(eta0 * 0.5 * (1.0 + (PI * epoch as f64 / *total_epochs as f64).cos()))
        }
        ScheduleSpec::Theorem1 { eta0, total_steps } => {
            if global_step >= *total_steps {
                return Err(Error::contract(format!("step {global_step} out of range for K = {total_steps}")));
            }
            Ok(eta0 / (*total_steps as f64).sqrt())
        }
    }
}
