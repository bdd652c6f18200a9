//! Numerical spot checks of the inequalities behind the convergence bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::compute_perturbation;
use crate::oracle::StochasticOracle;
use crate::rng::SeededRng;
use crate::vector::{norm, ParamVector};

/// Allowance for floating-point rounding in deterministic checks.
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    /// Largest `lhs − rhs` over all probes; non-positive when the inequality holds.
    pub max_margin: f64,
    pub probes: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub rho: f64,
    pub lipschitz: f64,
    pub sigma: f64,
    pub mc_draws: usize,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    max_margin: f64,
    probes: usize,
    violations: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, max_margin: f64::NEG_INFINITY, probes: 0, violations: 0 }
    }

    /// Records `lhs − rhs`; the probe violates when it exceeds `allowance`.
    fn record(&mut self, margin: f64, allowance: f64) {
        self.probes += 1;
        self.max_margin = self.max_margin.max(margin);
        if margin > allowance {
            self.violations += 1;
        }
    }

    fn finish(self) -> InequalityCheck {
        InequalityCheck {
            name: self.name.to_string(),
            max_margin: self.max_margin,
            probes: self.probes,
            violations: self.violations,
            passed: self.violations == 0,
        }
    }
}

pub const LIPSCHITZ_PERTURBATION: &str = "perturbed-gradient-shift";
pub const PERTURBED_NORM: &str = "perturbed-gradient-norm";
pub const VARIANCE_DECOMPOSITION: &str = "second-moment";

/// Checks at every probe point:
///
/// * `‖g(x+ε) − g(x)‖ ≤ Lρ` with both gradients on one batch,
/// * `‖g(x+ε)‖² ≤ 2L²ρ² + 2‖g(x)‖²`,
/// * `E‖g(x)‖² ≤ σ² + ‖∇f(x)‖²`, by Monte Carlo over `mc_draws` batches,
///   allowing three standard errors.
///
/// The oracle must declare both `L` and `σ`.
pub fn check_proof_inequalities<O: StochasticOracle + ?Sized>(
    oracle: &mut O,
    probes: &[ParamVector],
    rho: f64,
    mc_draws: usize,
    rng: &mut SeededRng,
) -> Result<InequalityReport> {
    let lipschitz = oracle
        .lipschitz_constant()
        .ok_or_else(|| Error::config("oracle does not declare a gradient Lipschitz constant"))?;
    let sigma = oracle
        .noise_bound()
        .ok_or_else(|| Error::config("oracle does not declare a gradient noise bound"))?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::contract(format!("rho must be positive, got {rho}")));
    }
    if probes.is_empty() || mc_draws < 2 {
        return Err(Error::contract("need at least one probe and two Monte-Carlo draws"));
    }

    let mut shift = Tally::new(LIPSCHITZ_PERTURBATION);
    let mut perturbed = Tally::new(PERTURBED_NORM);
    let mut second_moment = Tally::new(VARIANCE_DECOMPOSITION);
    for x in probes {
        let batch = oracle.draw_batch(rng);
        let (_, g) = oracle.batch_loss_gradient(x, &batch)?;
        let eps = compute_perturbation(&g, rho)?;
        let (_, gp) = oracle.batch_loss_gradient(&x.add(&eps)?, &batch)?;

        let lr = lipschitz * rho;
        shift.record(norm(&gp.sub(&g)?)? - lr, ROUNDING * lr.max(1.0));

        let rhs = 2.0 * lr * lr + 2.0 * g.norm_squared();
        perturbed.record(gp.norm_squared() - rhs, ROUNDING * rhs.max(1.0));

        let full = oracle.full_gradient(x)?.norm_squared();
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in 0..mc_draws {
            let v = oracle.stochastic_gradient(x, rng)?.norm_squared();
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
        }
        let se = (m2 / (mc_draws - 1) as f64 / mc_draws as f64).sqrt();
        let rhs = sigma * sigma + full;
        second_moment.record(mean - rhs, 3.0 * se + ROUNDING * rhs.max(1.0));
    }

    Ok(InequalityReport {
        rho,
        lipschitz,
        sigma,
        mc_draws,
        checks: vec![shift.finish(), perturbed.finish(), second_moment.finish()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{QuadraticProblem, RosenbrockProblem};

    fn probes(dim: usize, n: usize, seed: u64) -> Vec<ParamVector> {
        let mut rng = SeededRng::new(seed);
        (0..n).map(|_| ParamVector::from((0..dim).map(|_| rng.normal()).collect::<Vec<_>>())).collect()
    }

    #[test]
    fn noiseless_quadratic_holds() {
        let mut p = QuadraticProblem::random(5, 0.1, 2.0, 1.0, 0.0, 3).unwrap();
        let mut rng = SeededRng::new(1);
        let report = check_proof_inequalities(&mut p, &probes(5, 20, 2), 0.2, 10, &mut rng).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.check(LIPSCHITZ_PERTURBATION).unwrap().max_margin <= 1e-12);
    }

    #[test]
    fn zero_variance_is_tight() {
        let mut p = QuadraticProblem::isotropic(3, 1.0, 0.0).unwrap();
        let mut rng = SeededRng::new(1);
        let report = check_proof_inequalities(&mut p, &probes(3, 5, 4), 0.1, 10, &mut rng).unwrap();
        let c = report.check(VARIANCE_DECOMPOSITION).unwrap();
        assert!(c.max_margin.abs() < 1e-12, "{}", c.max_margin);
        assert!(c.passed);
    }

    #[test]
    fn top_eigenvector_makes_shift_tight() {
        // isotropic A = 2I: every direction is a top eigenvector, ‖Aε‖ = Lρ
        let mut p = QuadraticProblem::isotropic(2, 2.0, 0.0).unwrap();
        let mut rng = SeededRng::new(1);
        let report = check_proof_inequalities(&mut p, &probes(2, 5, 9), 0.3, 4, &mut rng).unwrap();
        let c = report.check(LIPSCHITZ_PERTURBATION).unwrap();
        assert!(c.max_margin.abs() < 1e-12);
        assert!(c.passed);
    }

    #[test]
    fn monte_carlo_second_moment_gap() {
        // d = 2, per-coordinate sd 0.1: E‖g‖² − ‖∇f‖² = 0.02
        let p = QuadraticProblem::isotropic(2, 1.0, 0.1).unwrap();
        let mut o = p.oracle();
        let mut rng = SeededRng::new(5);
        let x = ParamVector::from(vec![0.5, -0.2]);
        let full = o.full_gradient(&x).unwrap().norm_squared();
        let n = 10_000;
        let vals: Vec<f64> =
            (0..n).map(|_| o.stochastic_gradient(&x, &mut rng).unwrap().norm_squared() - full).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 0.02).abs() <= 3.0 * sd / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn understated_constants_are_caught() {
        struct Understated(QuadraticProblem);
        impl StochasticOracle for Understated {
            fn dimension(&self) -> usize {
                self.0.dimension()
            }
            fn loss(&self, x: &ParamVector) -> Result<f64> {
                self.0.loss(x)
            }
            fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
                self.0.full_gradient(x)
            }
            fn draw_batch(&mut self, rng: &mut SeededRng) -> crate::oracle::Batch {
                self.0.draw_batch(rng)
            }
            fn batch_loss_gradient(&self, x: &ParamVector, b: &crate::oracle::Batch) -> Result<(f64, ParamVector)> {
                self.0.batch_loss_gradient(x, b)
            }
            fn lipschitz_constant(&self) -> Option<f64> {
                Some(0.5 * self.0.lipschitz_constant().unwrap())
            }
            fn noise_bound(&self) -> Option<f64> {
                Some(0.1 * self.0.noise_bound().unwrap())
            }
        }
        let mut o = Understated(QuadraticProblem::isotropic(2, 1.0, 0.3).unwrap());
        let mut rng = SeededRng::new(1);
        let report = check_proof_inequalities(&mut o, &probes(2, 10, 3), 0.1, 2000, &mut rng).unwrap();
        assert!(!report.check(LIPSCHITZ_PERTURBATION).unwrap().passed);
        assert!(!report.check(VARIANCE_DECOMPOSITION).unwrap().passed);
    }

    #[test]
    fn missing_constants_are_config_errors() {
        let mut p = RosenbrockProblem::new(2, 0.0).unwrap();
        let mut rng = SeededRng::new(1);
        let r = check_proof_inequalities(&mut p, &probes(2, 1, 1), 0.1, 10, &mut rng);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
