//! Central finite-difference audits of analytic gradients.

use serde::Serialize;

use crate::error::Result;
use crate::oracle::StochasticOracle;
use crate::rng::SeededRng;
use crate::vector::ParamVector;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;

/// `(f(x + h e_i) − f(x − h e_i)) / 2h` for every coordinate.
pub fn central_difference_gradient<F>(f: F, x: &ParamVector, h: f64) -> Result<ParamVector>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let xi = x[i];
        probe.as_mut_slice()[i] = xi + h;
        let plus = f(&probe)?;
        probe.as_mut_slice()[i] = xi - h;
        let minus = f(&probe)?;
        probe.as_mut_slice()[i] = xi;
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(ParamVector::from(out))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute gap when both are below 1e-8.
pub fn relative_error(a: &ParamVector, b: &ParamVector) -> f64 {
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a.norm_squared().sqrt().max(b.norm_squared().sqrt());
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckReport {
    pub problem: String,
    pub step: f64,
    pub tolerance: f64,
    /// Relative error of the full gradient at each probe point.
    pub full_gradient_errors: Vec<f64>,
    /// Relative error of one batch gradient against its own batch loss.
    pub batch_gradient_errors: Vec<f64>,
}

impl GradcheckReport {
    pub fn max_error(&self) -> f64 {
        self.full_gradient_errors.iter().chain(&self.batch_gradient_errors).fold(0.0, |m, e| m.max(*e))
    }

    pub fn passed(&self) -> bool {
        self.max_error() < self.tolerance
    }
}

/// Checks full and batch gradients at each point against central differences.
pub fn audit_oracle<O: StochasticOracle + ?Sized>(
    name: &str,
    oracle: &mut O,
    points: &[ParamVector],
    h: f64,
    tolerance: f64,
    rng: &mut SeededRng,
) -> Result<GradcheckReport> {
    let mut full = Vec::with_capacity(points.len());
    let mut batch_errors = Vec::with_capacity(points.len());
    for x in points {
        let numeric = central_difference_gradient(|z| oracle.loss(z), x, h)?;
        full.push(relative_error(&oracle.full_gradient(x)?, &numeric));
        let batch = oracle.draw_batch(rng);
        let numeric = central_difference_gradient(|z| Ok(oracle.batch_loss_gradient(z, &batch)?.0), x, h)?;
        batch_errors.push(relative_error(&oracle.batch_loss_gradient(x, &batch)?.1, &numeric));
    }
    Ok(GradcheckReport {
        problem: name.to_string(),
        step: h,
        tolerance,
        full_gradient_errors: full,
        batch_gradient_errors: batch_errors,
    })
}
