//! SGD, SAM, SAMAR and VaSSO behind one step interface.
//!
//! Each optimizer exists twice: as a free function with an explicit state
//! argument ([`sgd_step`], [`sam_step`], [`samar_step`], [`vasso_step`]) and
//! as a variant of [`Optimizer`], which owns its state and produces a
//! [`StepRecord`] per call. Both paths run the same arithmetic, so the
//! reduction identities between the methods hold bit for bit.

mod baselines;
mod samar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Batch, StochasticOracle};
use crate::rng::SeededRng;
use crate::vector::{axpy, norm, ParamVector};

pub use baselines::{sam_step, sgd_step, vasso_step, VassoConvention};
pub use samar::{
    blended_gradient, compute_perturbation, project_lambda, samar_step, sharpness_ratio,
    update_lambda, SamarConfig, SamarState,
};

/// Gradient norms below this are treated as zero.
pub const ZERO_GRADIENT_TOL: f64 = 1e-12;

/// Losses with magnitude above this count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: usize,
    /// Filled in by the harness; zero when stepping by hand.
    pub epoch: usize,
    /// Batch loss at `x_k`.
    pub loss: f64,
    /// `‖g(x_k)‖`.
    pub grad_norm: f64,
    /// `‖g(x_k + eps)‖`; absent for SGD.
    pub perturbed_grad_norm: Option<f64>,
    /// Weight on the perturbed gradient in this step's update.
    pub lambda: f64,
    /// Sharpness ratio `r_k`; SAMAR only, absent at `k = 0`.
    pub ratio: Option<f64>,
    pub learning_rate: f64,
    /// Batch `f(x_k + eps) − f(x_k)`; absent for SGD.
    pub sharpness_estimate: Option<f64>,
}

/// Result of one optimizer step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub x: ParamVector,
    pub record: StepRecord,
    /// The ascent perturbation used in this step, if any.
    pub perturbation: Option<ParamVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Sgd,
    Sam {
        rho: f64,
    },
    Samar(SamarConfig),
    Vasso {
        rho: f64,
        theta: f64,
        #[serde(default)]
        convention: VassoConvention,
    },
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Sgd => "sgd",
            OptimizerSpec::Sam { .. } => "sam",
            OptimizerSpec::Samar(_) => "samar",
            OptimizerSpec::Vasso { .. } => "vasso",
        }
    }

    /// Perturbation radius, if the method has one.
    pub fn rho(&self) -> Option<f64> {
        match self {
            OptimizerSpec::Sgd => None,
            OptimizerSpec::Sam { rho } | OptimizerSpec::Vasso { rho, .. } => Some(*rho),
            OptimizerSpec::Samar(cfg) => Some(cfg.rho),
        }
    }

    /// Copy of this spec with the perturbation radius replaced.
    pub fn with_rho(&self, rho: f64) -> OptimizerSpec {
        let mut spec = self.clone();
        match &mut spec {
            OptimizerSpec::Sgd => {}
            OptimizerSpec::Sam { rho: r } | OptimizerSpec::Vasso { rho: r, .. } => *r = rho,
            OptimizerSpec::Samar(cfg) => cfg.rho = rho,
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerSpec::Sgd => Ok(()),
            OptimizerSpec::Sam { rho } => check_rho(*rho),
            OptimizerSpec::Samar(cfg) => cfg.validate(),
            OptimizerSpec::Vasso { rho, theta, .. } => {
                check_rho(*rho)?;
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return Err(Error::config(format!("VaSSO theta must lie in (0, 1], got {theta}")));
                }
                Ok(())
            }
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::config(format!("perturbation radius rho must be positive, got {rho}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum MethodState {
    Sgd,
    Sam,
    Samar { lambda: f64, prev_grad_norm: Option<f64> },
    Vasso { direction: ParamVector },
}

/// An optimizer owning its per-run state.
#[derive(Clone, Debug)]
pub struct Optimizer {
    spec: OptimizerSpec,
    state: MethodState,
    step_index: usize,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        let state = match &spec {
            OptimizerSpec::Sgd => MethodState::Sgd,
            OptimizerSpec::Sam { .. } => MethodState::Sam,
            OptimizerSpec::Samar(cfg) => MethodState::Samar {
                lambda: cfg.initial_lambda(),
                prev_grad_norm: None,
            },
            OptimizerSpec::Vasso { .. } => MethodState::Vasso { direction: ParamVector::zeros(dim) },
        };
        Ok(Self { spec, state, step_index: 0 })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Current SAMAR weight `λ_k`, if this is a SAMAR optimizer.
    pub fn lambda(&self) -> Option<f64> {
        match &self.state {
            MethodState::Samar { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }

    pub fn step<O: StochasticOracle + ?Sized>(
        &mut self,
        x: &ParamVector,
        oracle: &mut O,
        eta: f64,
        rng: &mut SeededRng,
    ) -> Result<StepOutput> {
        let k = self.step_index;
        let out = match (&self.spec, &mut self.state) {
            (OptimizerSpec::Sgd, MethodState::Sgd) => baselines::sgd_update(x, oracle, eta, rng, k)?,
            (OptimizerSpec::Sam { rho }, MethodState::Sam) => {
                baselines::sam_update(x, oracle, eta, *rho, rng, k)?
            }
            (OptimizerSpec::Samar(cfg), MethodState::Samar { lambda, prev_grad_norm }) => {
                let (out, next_lambda) = samar::samar_update(x, *lambda, *prev_grad_norm, k, oracle, eta, cfg, rng)?;
                *lambda = next_lambda;
                *prev_grad_norm = Some(out.record.grad_norm);
                out
            }
            (OptimizerSpec::Vasso { rho, theta, convention }, MethodState::Vasso { direction }) => {
                let (out, d) =
                    baselines::vasso_update(x, direction, oracle, eta, *rho, *theta, *convention, rng, k)?;
                *direction = d;
                out
            }
            _ => unreachable!("optimizer state always matches its spec"),
        };
        self.step_index += 1;
        Ok(out)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::contract(format!("learning rate must be finite and >= 0, got {eta}")));
    }
    Ok(())
}

fn check_loss(loss: f64, step: usize) -> Result<()> {
    if !loss.is_finite() || loss.abs() > DIVERGENCE_THRESHOLD {
        return Err(Error::DivergenceDetected { step, loss });
    }
    Ok(())
}

/// Batch loss and gradient at `x`, with the divergence check applied.
fn evaluate<O: StochasticOracle + ?Sized>(
    oracle: &O,
    x: &ParamVector,
    batch: &Batch,
    step: usize,
) -> Result<(f64, ParamVector)> {
    let (loss, g) = oracle.batch_loss_gradient(x, batch)?;
    check_loss(loss, step)?;
    if !g.is_finite() {
        return Err(Error::DivergenceDetected { step, loss });
    }
    Ok((loss, g))
}

/// `x − eta * direction`, reporting overflow as divergence.
fn descend(x: &ParamVector, eta: f64, direction: &ParamVector, step: usize, loss: f64) -> Result<ParamVector> {
    match axpy(-eta, direction, x) {
        Err(Error::NonFinite(_)) => Err(Error::DivergenceDetected { step, loss }),
        other => other,
    }
}

/// Shared body of SAM and VaSSO: perturb along `direction`, descend along
/// the perturbed gradient.
#[allow(clippy::too_many_arguments)]
fn perturbed_descent<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    direction: &ParamVector,
    batch: &Batch,
    loss: f64,
    grad_norm: f64,
    oracle: &O,
    eta: f64,
    rho: f64,
    step: usize,
) -> Result<StepOutput> {
    let eps = compute_perturbation(direction, rho)?;
    let (loss_pert, g_pert) = evaluate(oracle, &x.add(&eps)?, batch, step)?;
    let x_next = descend(x, eta, &g_pert, step, loss)?;
    Ok(StepOutput {
        x: x_next,
        record: StepRecord {
            step_index: step,
            epoch: 0,
            loss,
            grad_norm,
            perturbed_grad_norm: Some(norm(&g_pert)?),
            lambda: 1.0,
            ratio: None,
            learning_rate: eta,
            sharpness_estimate: Some(loss_pert - loss),
        },
        perturbation: Some(eps),
    })
}
