//! SAMAR: a convex blend of the plain and the sharpness-perturbed stochastic
//! gradient, with the blend weight `λ` adapted from the ratio of successive
//! gradient norms.
//!
//! One iteration:
//!
//! 1. draw a batch and compute `g(x_k)`;
//! 2. `eps = ρ g(x_k) / ‖g(x_k)‖`;
//! 3. `s_k = (1 − λ_k) g(x_k) + λ_k g(x_k + eps)` on the same batch;
//! 4. `x_{k+1} = x_k − η_k s_k`;
//! 5. `r_k = ‖g(x_k)‖ / ‖g(x_{k−1})‖` (skipped at `k = 0`);
//! 6. `λ_{k+1} = Proj[δ, 1−δ](γ λ_k)` if `r_k ≥ χ` or `k = 0`, else
//!    `Proj[δ, 1−δ](λ_k / γ)`.

use serde::{Deserialize, Serialize};

use super::{check_eta, descend, evaluate, StepOutput, StepRecord, ZERO_GRADIENT_TOL};
use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;
use crate::rng::SeededRng;
use crate::vector::{norm, ParamVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamarConfig {
    /// Perturbation radius `ρ`.
    pub rho: f64,
    /// Initial weight `λ_0`, in `(0, 1]`.
    pub lambda0: f64,
    /// Ratio threshold `χ`.
    pub chi: f64,
    /// Adjustment factor `γ > 1`.
    pub gamma: f64,
    /// Projection margin `δ ∈ (0, 0.5)`.
    pub delta: f64,
    /// Holds `λ` fixed at this value and skips adaptation and projection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pinned_lambda: Option<f64>,
}

impl Default for SamarConfig {
    /// CIFAR-10 / ResNet-34 hyperparameters.
    fn default() -> Self {
        Self { rho: 0.10, lambda0: 1.0, chi: 1.100, gamma: 1.550, delta: 0.01, pinned_lambda: None }
    }
}

impl SamarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return Err(Error::config(format!("lambda0 must lie in (0, 1], got {}", self.lambda0)));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::config(format!("delta must lie in (0, 0.5), got {}", self.delta)));
        }
        if !self.chi.is_finite() {
            return Err(Error::config("chi must be finite"));
        }
        if let Some(p) = self.pinned_lambda {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("pinned lambda must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn initial_lambda(&self) -> f64 {
        self.pinned_lambda.unwrap_or(self.lambda0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamarState {
    pub x: ParamVector,
    pub lambda: f64,
    /// `‖g(x_{k−1})‖`; present iff `step_index ≥ 1`.
    pub prev_grad_norm: Option<f64>,
    pub step_index: usize,
}

impl SamarState {
    pub fn new(x: ParamVector, cfg: &SamarConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { x, lambda: cfg.initial_lambda(), prev_grad_norm: None, step_index: 0 })
    }
}

/// `ε = ρ g / ‖g‖`, the maximizer of the linearized loss over the `ρ`-ball.
pub fn compute_perturbation(g: &ParamVector, rho: f64) -> Result<ParamVector> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::contract(format!("rho must be positive, got {rho}")));
    }
    let n = norm(g)?;
    if n < ZERO_GRADIENT_TOL {
        return Err(Error::ZeroGradient { norm: n });
    }
    Ok(g.scaled(rho / n))
}

/// `(1 − λ) g + λ g_pert`.
pub fn blended_gradient(g: &ParamVector, g_pert: &ParamVector, lambda: f64) -> Result<ParamVector> {
    if g.dim() != g_pert.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: g_pert.dim() });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::contract(format!("blend weight must lie in [0, 1], got {lambda}")));
    }
    let keep = 1.0 - lambda;
    Ok(ParamVector::from(
        g.iter().zip(g_pert.iter()).map(|(a, b)| keep * a + lambda * b).collect::<Vec<_>>(),
    ))
}

/// `r_k = ‖g(x_k)‖ / ‖g(x_{k−1})‖`.
pub fn sharpness_ratio(grad_norm_k: f64, grad_norm_prev: f64) -> Result<f64> {
    if !(grad_norm_prev > ZERO_GRADIENT_TOL) {
        return Err(Error::DegenerateRatio { prev: grad_norm_prev });
    }
    if !(grad_norm_k >= 0.0) {
        return Err(Error::contract(format!("gradient norm must be >= 0, got {grad_norm_k}")));
    }
    Ok(grad_norm_k / grad_norm_prev)
}

/// `max(δ, min(λ, 1 − δ))`.
pub fn project_lambda(lambda: f64, delta: f64) -> f64 {
    delta.max(lambda.min(1.0 - delta))
}

/// Next `λ`. The increase branch fires when `k = 0` or `r_k ≥ χ`; a missing
/// ratio at `k ≥ 1` is treated like `k = 0`.
pub fn update_lambda(lambda_k: f64, ratio: Option<f64>, k: usize, cfg: &SamarConfig) -> f64 {
    debug_assert!(k == 0 || ratio.is_some(), "ratio required for k >= 1");
    let increase = k == 0 || ratio.is_none_or(|r| r >= cfg.chi);
    let raw = if increase { cfg.gamma * lambda_k } else { lambda_k / cfg.gamma };
    project_lambda(raw, cfg.delta)
}

/// One SAMAR iteration on explicit state.
pub fn samar_step<O: StochasticOracle + ?Sized>(
    state: SamarState,
    oracle: &mut O,
    eta_k: f64,
    cfg: &SamarConfig,
    rng: &mut SeededRng,
) -> Result<(SamarState, StepRecord)> {
    cfg.validate()?;
    if state.prev_grad_norm.is_some() != (state.step_index >= 1) {
        return Err(Error::contract("prev_grad_norm must be present exactly when step_index >= 1"));
    }
    let k = state.step_index;
    let (out, lambda) = samar_update(&state.x, state.lambda, state.prev_grad_norm, k, oracle, eta_k, cfg, rng)?;
    let next = SamarState {
        x: out.x,
        lambda,
        prev_grad_norm: Some(out.record.grad_norm),
        step_index: k + 1,
    };
    Ok((next, out.record))
}

#[allow(clippy::too_many_arguments)]
pub(super) fn samar_update<O: StochasticOracle + ?Sized>(
    x: &ParamVector,
    lambda: f64,
    prev_grad_norm: Option<f64>,
    k: usize,
    oracle: &mut O,
    eta: f64,
    cfg: &SamarConfig,
    rng: &mut SeededRng,
) -> Result<(StepOutput, f64)> {
    check_eta(eta)?;
    let batch = oracle.draw_batch(rng);
    let (loss, g) = evaluate(&*oracle, x, &batch, k)?;
    let eps = compute_perturbation(&g, cfg.rho)?;
    let (loss_pert, g_pert) = evaluate(&*oracle, &x.add(&eps)?, &batch, k)?;

    let s = blended_gradient(&g, &g_pert, lambda)?;
    let x_next = descend(x, eta, &s, k, loss)?;

    let grad_norm = norm(&g)?;
    let ratio = match prev_grad_norm {
        Some(prev) if k >= 1 => Some(sharpness_ratio(grad_norm, prev)?),
        _ => None,
    };
    let next_lambda = match cfg.pinned_lambda {
        Some(p) => p,
        None => update_lambda(lambda, ratio, k, cfg),
    };

    let record = StepRecord {
        step_index: k,
        epoch: 0,
        loss,
        grad_norm,
        perturbed_grad_norm: Some(norm(&g_pert)?),
        lambda,
        ratio,
        learning_rate: eta,
        sharpness_estimate: Some(loss_pert - loss),
    };
    Ok((StepOutput { x: x_next, record, perturbation: Some(eps) }, next_lambda))
}
