//! The nonconvex convergence bound for SAMAR.
//!
//! With `η_k = η₀/√K`, `ρ = ρ₀/√K` and `ν = 1 − 5Lη₀/(2√K)`:
//!
//! ```text
//! (1/K) Σ E‖∇f(x_k)‖² ≤ (1/ν) [ (f(x₀) − f_inf)/(η₀√K) + Lρ₀²/(2η₀√K)
//!                              + 3Lη₀σ²/√K + 2L³η₀ρ₀²/K^{3/2} ]
//! ```
//!
//! and the perturbed-gradient average is bounded by twice that plus `2L²ρ₀²/K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub lipschitz: f64,
    pub sigma: f64,
    pub rho0: f64,
    pub eta0: f64,
    pub f0: f64,
    pub f_inf: f64,
    pub k: usize,
}

/// The four bracketed terms and `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub nu: f64,
    pub optimality_gap: f64,
    pub perturbation: f64,
    pub variance: f64,
    pub curvature: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        (self.optimality_gap + self.perturbation + self.variance + self.curvature) / self.nu
    }
}

impl BoundInputs {
    pub fn nu(&self) -> f64 {
        1.0 - 5.0 * self.lipschitz * self.eta0 / (2.0 * (self.k as f64).sqrt())
    }

    /// Per-step learning rate `η₀/√K`.
    pub fn step_size(&self) -> f64 {
        self.eta0 / (self.k as f64).sqrt()
    }

    /// Perturbation radius `ρ₀/√K`.
    pub fn radius(&self) -> f64 {
        self.rho0 / (self.k as f64).sqrt()
    }

    /// `ν > 0` is equivalent to the strict stepsize condition `η₀/√K < 2/(5L)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::contract("L must be positive"));
        }
        if !(self.sigma >= 0.0 && self.rho0 >= 0.0) {
            return Err(Error::contract("sigma and rho0 must be non-negative"));
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::contract("eta0 must be positive"));
        }
        if self.k == 0 {
            return Err(Error::contract("K must be >= 1"));
        }
        if !(self.f0.is_finite() && self.f_inf.is_finite()) {
            return Err(Error::NonFinite("bound inputs"));
        }
        let nu = self.nu();
        if !(nu > 0.0) {
            return Err(Error::VacuousBound { nu });
        }
        Ok(())
    }

    pub fn terms(&self) -> Result<BoundTerms> {
        self.validate()?;
        let l = self.lipschitz;
        let sk = (self.k as f64).sqrt();
        let k32 = self.k as f64 * sk;
        Ok(BoundTerms {
            nu: self.nu(),
            optimality_gap: (self.f0 - self.f_inf) / (self.eta0 * sk),
            perturbation: l * self.rho0 * self.rho0 / (2.0 * self.eta0 * sk),
            variance: 3.0 * l * self.eta0 * self.sigma * self.sigma / sk,
            curvature: 2.0 * l.powi(3) * self.eta0 * self.rho0 * self.rho0 / k32,
        })
    }
}

/// Upper bound on `(1/K) Σ E‖∇f(x_k)‖²`.
pub fn theorem1_bound(inp: &BoundInputs) -> Result<f64> {
    Ok(inp.terms()?.total())
}

/// Upper bound on `(1/K) Σ E‖∇f(x_k + eps_k)‖²`.
pub fn theorem1_perturbed_bound(inp: &BoundInputs) -> Result<f64> {
    let base = theorem1_bound(inp)?;
    let l = inp.lipschitz;
    Ok(2.0 * base + 2.0 * l * l * inp.rho0 * inp.rho0 / inp.k as f64)
}
