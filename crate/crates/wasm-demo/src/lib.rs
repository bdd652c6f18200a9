//! Browser bindings: optimizer trajectories on 2-D problems, the SAMAR
//! weight trace, and convergence-bound curves.
//!
//! Results are flat `Float64Array`s so the page can draw them directly.

use samar::analysis::{theorem1_bound, theorem1_perturbed_bound, BoundInputs};
use samar::optim::{Optimizer, OptimizerSpec, SamarConfig, VassoConvention};
use samar::problems::{QuadraticProblem, RosenbrockProblem};
use samar::{Error, ParamVector, SeededRng, StochasticOracle};
use wasm_bindgen::prelude::*;

fn oracle_for(problem: &str, noise: f64) -> Result<Box<dyn StochasticOracle>, String> {
    let oracle: Box<dyn StochasticOracle> = match problem {
        "rosenbrock" => Box::new(RosenbrockProblem::new(2, noise).map_err(err)?),
        "quadratic" => Box::new(QuadraticProblem::diagonal(&[1.0, 0.1], noise).map_err(err)?),
        other => return Err(format!("unknown problem `{other}`")),
    };
    Ok(oracle)
}

fn err(e: Error) -> String {
    e.to_string()
}

fn samar_config(rho: f64, gamma: f64, chi: f64, delta: f64) -> SamarConfig {
    SamarConfig { rho, lambda0: 1.0, chi, gamma, delta, pinned_lambda: None }
}

fn spec_for(optimizer: &str, rho: f64) -> Result<OptimizerSpec, String> {
    Ok(match optimizer {
        "sgd" => OptimizerSpec::Sgd,
        "sam" => OptimizerSpec::Sam { rho },
        "samar" => OptimizerSpec::Samar(samar_config(rho, 1.55, 1.1, 0.01)),
        "vasso" => OptimizerSpec::Vasso { rho, theta: 0.9, convention: VassoConvention::default() },
        other => return Err(format!("unknown optimizer `{other}`")),
    })
}

/// Iterates of one optimizer as `[x, y, loss]` triples, starting at
/// `(x0, y0)`. Stops early at a stationary point or on divergence.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    optimizer: &str,
    problem: &str,
    x0: f64,
    y0: f64,
    eta: f64,
    rho: f64,
    steps: usize,
    noise: f64,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let mut oracle = oracle_for(problem, noise)?;
    let mut opt = Optimizer::new(spec_for(optimizer, rho)?, 2).map_err(err)?;
    let mut rng = SeededRng::new(u64::from(seed));
    let mut x = ParamVector::from(vec![x0, y0]);
    let mut out = vec![x0, y0, oracle.loss(&x).map_err(err)?];
    for _ in 0..steps {
        match opt.step(&x, oracle.as_mut(), eta, &mut rng) {
            Ok(step) => x = step.x,
            Err(Error::ZeroGradient { .. } | Error::DivergenceDetected { .. }) => break,
            Err(e) => return Err(err(e)),
        }
        out.extend([x[0], x[1], oracle.loss(&x).map_err(err)?]);
    }
    Ok(out)
}

/// SAMAR run on a 2-D problem, as `[λ_k, r_k, ‖g_k‖]` triples; `r_0` is NaN.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn lambda_trace(
    problem: &str,
    gamma: f64,
    chi: f64,
    delta: f64,
    eta: f64,
    rho: f64,
    steps: usize,
    noise: f64,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let mut oracle = oracle_for(problem, noise)?;
    let spec = OptimizerSpec::Samar(samar_config(rho, gamma, chi, delta));
    let mut opt = Optimizer::new(spec, 2).map_err(err)?;
    let mut rng = SeededRng::new(u64::from(seed));
    let mut x = ParamVector::from(vec![-1.2, 1.0]);
    let mut out = Vec::with_capacity(3 * steps);
    for _ in 0..steps {
        match opt.step(&x, oracle.as_mut(), eta, &mut rng) {
            Ok(step) => {
                let r = &step.record;
                out.extend([r.lambda, r.ratio.unwrap_or(f64::NAN), r.grad_norm]);
                x = step.x;
            }
            Err(Error::ZeroGradient { .. } | Error::DivergenceDetected { .. }) => break,
            Err(e) => return Err(err(e)),
        }
    }
    Ok(out)
}

/// Noiseless loss on an `nx × ny` grid over `[x_min, x_max] × [y_min, y_max]`,
/// row by row from `y_min`. Used to shade the trajectory plot.
#[wasm_bindgen]
pub fn loss_grid(
    problem: &str,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, String> {
    let oracle = oracle_for(problem, 0.0)?;
    let step = |lo: f64, hi: f64, n: usize, i: usize| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = ParamVector::from(vec![step(x_min, x_max, nx, i), step(y_min, y_max, ny, j)]);
            out.push(oracle.loss(&p).map_err(err)?);
        }
    }
    Ok(out)
}

/// Bound and perturbed bound for each `K`, as `[K, bound, perturbed]`
/// triples. Run lengths where the bound is vacuous give NaN.
#[wasm_bindgen]
pub fn bound_curve(lipschitz: f64, sigma: f64, rho0: f64, eta0: f64, gap: f64, ks: Vec<u32>) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * ks.len());
    for k in ks {
        let inp = BoundInputs { lipschitz, sigma, rho0, eta0, f0: gap, f_inf: 0.0, k: k as usize };
        let b = theorem1_bound(&inp).unwrap_or(f64::NAN);
        let p = theorem1_perturbed_bound(&inp).unwrap_or(f64::NAN);
        out.extend([k as f64, b, p]);
    }
    out
}
