//! SGD, SAM and VaSSO.

use serde::{Deserialize, Serialize};

use super::{check_eta, descend, evaluate, perturbed_descent, StepOutput, StepRecord};
use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;
use crate::rng::SeededRng;
use crate::vector::{norm, ParamVector};

/// Which term of the VaSSO direction average carries `θ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VassoConvention {
    /// `d_k = (1 − θ) d_{k−1} + θ g(x_k)`.
    #[default]
    FreshWeighted,
    /// `d_k = θ d_{k−1} + (1 − θ) g(x_k)`.
    MemoryWeighted,
}

impl VassoConvention {
    fn weights(self, theta: f64) -> (f64, f64) {
        match self {
            VassoConvention::FreshWeighted => (1.0 - theta, theta),
            VassoConvention::MemoryWeighted => (theta, 1.0 - theta),
        }
    }
}

/// `x − η g(x)`.
pub fn sgd_step<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    oracle: &mut O,
    eta_k: f64,
    rng: &mut SeededRng,
) -> Result<ParamVector> {
    Ok(sgd_update(x, oracle, eta_k, rng, 0)?.x)
}

/// `x − η g(x + ε)` with `ε = ρ g(x)/‖g(x)‖`, both gradients on one batch.
pub fn sam_step<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    oracle: &mut O,
    eta_k: f64,
    rho: f64,
    rng: &mut SeededRng,
) -> Result<ParamVector> {
    Ok(sam_update(x, oracle, eta_k, rho, rng, 0)?.x)
}

/// One VaSSO step. Returns the new iterate and the averaged direction `d_k`.
#[allow(clippy::too_many_arguments)]
pub fn vasso_step<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    d_prev: &ParamVector,
    oracle: &mut O,
    eta_k: f64,
    rho: f64,
    theta: f64,
    convention: VassoConvention,
    rng: &mut SeededRng,
) -> Result<(ParamVector, ParamVector)> {
    let (out, d) = vasso_update(x, d_prev, oracle, eta_k, rho, theta, convention, rng, 0)?;
    Ok((out.x, d))
}

pub(super) fn sgd_update<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    oracle: &mut O,
    eta: f64,
    rng: &mut SeededRng,
    step: usize,
) -> Result<StepOutput> {
    check_eta(eta)?;
    let batch = oracle.draw_batch(rng);
    let (loss, g) = evaluate(&*oracle, x, &batch, step)?;
    let x_next = descend(x, eta, &g, step, loss)?;
    Ok(StepOutput {
        x: x_next,
        record: StepRecord {
            step_index: step,
            epoch: 0,
            loss,
            grad_norm: norm(&g)?,
            perturbed_grad_norm: None,
            lambda: 0.0,
            ratio: None,
            learning_rate: eta,
            sharpness_estimate: None,
        },
        perturbation: None,
    })
}

pub(super) fn sam_update<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    oracle: &mut O,
    eta: f64,
    rho: f64,
    rng: &mut SeededRng,
    step: usize,
) -> Result<StepOutput> {
    check_eta(eta)?;
    let batch = oracle.draw_batch(rng);
    let (loss, g) = evaluate(&*oracle, x, &batch, step)?;
    let grad_norm = norm(&g)?;
    perturbed_descent(x, &g, &batch, loss, grad_norm, &*oracle, eta, rho, step)
}

#[allow(clippy::too_many_arguments)]
pub(super) fn vasso_update<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    d_prev: &ParamVector,
    oracle: &mut O,
    eta: f64,
    rho: f64,
    theta: f64,
    convention: VassoConvention,
    rng: &mut SeededRng,
    step: usize,
) -> Result<(StepOutput, ParamVector)> {
    check_eta(eta)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::contract(format!("theta must lie in (0, 1], got {theta}")));
    }
    if d_prev.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: d_prev.dim() });
    }
    let batch = oracle.draw_batch(rng);
    let (loss, g) = evaluate(&*oracle, x, &batch, step)?;
    let d = average_direction(d_prev, &g, theta, convention);
    let out = perturbed_descent(x, &d, &batch, loss, norm(&g)?, &*oracle, eta, rho, step)?;
    Ok((out, d))
}

fn average_direction(d_prev: &ParamVector, g: &ParamVector, theta: f64, convention: VassoConvention) -> ParamVector {
    let (w_mem, w_fresh) = convention.weights(theta);
    ParamVector::from(d_prev.iter().zip(g.iter()).map(|(d, gi)| w_mem * d + w_fresh * gi).collect::<Vec<_>>())
}
