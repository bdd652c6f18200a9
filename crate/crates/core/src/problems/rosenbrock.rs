//! The chained Rosenbrock function, a standard nonconvex test surface.
//!
//! `f(x) = Σ_{i<d−1} [100 (x_{i+1} − x_i²)² + (1 − x_i)²]`, minimum 0 at all-ones.
//! The gradient is not globally Lipschitz, so no `L` is declared.

use crate::error::{Error, Result};
use crate::oracle::{Batch, StochasticOracle};
use crate::rng::SeededRng;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct RosenbrockProblem {
    dim: usize,
    noise_sigma: f64,
}

impl RosenbrockProblem {
    pub fn new(dim: usize, noise_sigma: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::config(format!("Rosenbrock needs d >= 2, got {dim}")));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma must be >= 0"));
        }
        Ok(Self { dim, noise_sigma })
    }

    /// The customary start `(−1.2, 1, −1.2, 1, …)`.
    pub fn standard_start(&self) -> ParamVector {
        ParamVector::from((0..self.dim).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect::<Vec<_>>())
    }

    pub fn value_and_gradient(&self, x: &ParamVector) -> Result<(f64, ParamVector)> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let x = x.as_slice();
        let mut f = 0.0;
        let mut g = vec![0.0; self.dim];
        for i in 0..self.dim - 1 {
            let t = x[i + 1] - x[i] * x[i];
            let u = 1.0 - x[i];
            f += 100.0 * t * t + u * u;
            g[i] += -400.0 * x[i] * t - 2.0 * u;
            g[i + 1] += 200.0 * t;
        }
        Ok((f, ParamVector::from(g)))
    }
}

impl StochasticOracle for RosenbrockProblem {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        Ok(self.value_and_gradient(x)?.0)
    }

    fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        Ok(self.value_and_gradient(x)?.1)
    }

    fn draw_batch(&mut self, rng: &mut SeededRng) -> Batch {
        if self.noise_sigma == 0.0 {
            return Batch::Exact;
        }
        let s = self.noise_sigma;
        Batch::Noise(ParamVector::from((0..self.dim).map(|_| s * rng.normal()).collect::<Vec<_>>()))
    }

    fn batch_loss_gradient(&self, x: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        let (f, g) = self.value_and_gradient(x)?;
        match batch {
            Batch::Exact => Ok((f, g)),
            Batch::Noise(xi) => Ok((f + xi.dot(x)?, g.add(xi)?)),
            Batch::Indices(_) => Err(Error::contract("Rosenbrock oracle does not take index batches")),
        }
    }

    fn noise_bound(&self) -> Option<f64> {
        Some((self.dim as f64).sqrt() * self.noise_sigma)
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_minimum() {
        let p = RosenbrockProblem::new(5, 0.0).unwrap();
        let (f, g) = p.value_and_gradient(&ParamVector::filled(5, 1.0)).unwrap();
        assert_eq!(f, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_differentiated_points() {
        let p = RosenbrockProblem::new(2, 0.0).unwrap();
        let (f, g) = p.value_and_gradient(&ParamVector::from(vec![0.0, 0.0])).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(g.as_slice(), &[-2.0, 0.0]);
        let (f, g) = p.value_and_gradient(&ParamVector::from(vec![1.0, 2.0])).unwrap();
        assert_eq!(f, 100.0);
        assert_eq!(g.as_slice(), &[-400.0, 200.0]);
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(RosenbrockProblem::new(1, 0.0).is_err());
    }
}
