use crate::error::{Error, Result};
use crate::optim::compute_perturbation;
use crate::oracle::StochasticOracle;
use crate::vector::ParamVector;

/// First-order sharpness surrogate `f(x + ρ∇f/‖∇f‖) − f(x)`.
pub fn estimate_sharpness<O: StochasticOracle + ?Sized>(oracle: &O, x: &ParamVector, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::contract(format!("rho must be >= 0, got {rho}")));
    }
    let grad = oracle.full_gradient(x)?;
    if rho == 0.0 {
        // still reject stationary points so the precondition is uniform
        compute_perturbation(&grad, 1.0)?;
        return Ok(0.0);
    }
    let eps = compute_perturbation(&grad, rho)?;
    Ok(oracle.loss(&x.add(&eps)?)? - oracle.loss(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Batch;
    use crate::problems::QuadraticProblem;
    use crate::rng::SeededRng;
    use crate::vector::norm;
    use std::f64::consts::PI;

    struct Linear(ParamVector);

    impl StochasticOracle for Linear {
        fn dimension(&self) -> usize {
            self.0.dim()
        }
        fn loss(&self, x: &ParamVector) -> Result<f64> {
            self.0.dot(x)
        }
        fn full_gradient(&self, _: &ParamVector) -> Result<ParamVector> {
            Ok(self.0.clone())
        }
        fn draw_batch(&mut self, _: &mut SeededRng) -> Batch {
            Batch::Exact
        }
        fn batch_loss_gradient(&self, x: &ParamVector, _: &Batch) -> Result<(f64, ParamVector)> {
            Ok((self.loss(x)?, self.0.clone()))
        }
    }

    #[test]
    fn isotropic_quadratic_example() {
        // ½(1.1² − 1) = 0.105
        let p = QuadraticProblem::isotropic(2, 1.0, 0.0).unwrap();
        let s = estimate_sharpness(&p, &ParamVector::from(vec![1.0, 0.0]), 0.1).unwrap();
        assert!((s - 0.105).abs() < 1e-15);
    }

    #[test]
    fn zero_radius() {
        let p = QuadraticProblem::isotropic(2, 1.0, 0.0).unwrap();
        assert_eq!(estimate_sharpness(&p, &ParamVector::from(vec![1.0, 0.0]), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_is_rho_times_norm() {
        let c = ParamVector::from(vec![3.0, -4.0]);
        let o = Linear(c.clone());
        for x in [vec![0.0, 0.0], vec![10.0, -7.0]] {
            let s = estimate_sharpness(&o, &ParamVector::from(x), 0.25).unwrap();
            assert!((s - 0.25 * norm(&c).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_point_rejected() {
        let p = QuadraticProblem::isotropic(2, 1.0, 0.0).unwrap();
        assert!(matches!(estimate_sharpness(&p, &ParamVector::zeros(2), 0.1), Err(Error::ZeroGradient { .. })));
    }

    /// Exact `max_{‖ε‖≤ρ} f(x+ε) − f(x)` for a 2-D quadratic by dense search
    /// over the circle (the maximum of a convex function sits on the boundary).
    fn exact_sharpness_2d(p: &QuadraticProblem, x: &ParamVector, rho: f64) -> f64 {
        let f0 = p.loss(x).unwrap();
        (0..200_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 200_000.0;
                let e = ParamVector::from(vec![rho * t.cos(), rho * t.sin()]);
                p.loss(&x.add(&e).unwrap()).unwrap() - f0
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn surrogate_is_nonnegative_and_below_exact_maximum() {
        let p = QuadraticProblem::new(
            vec![3.0, 1.0, 1.0, 0.5],
            ParamVector::from(vec![0.2, -0.1]),
            0.0,
        )
        .unwrap();
        let mut rng = SeededRng::new(6);
        for _ in 0..10 {
            let x = ParamVector::from(vec![rng.normal(), rng.normal()]);
            let s = estimate_sharpness(&p, &x, 0.3).unwrap();
            let exact = exact_sharpness_2d(&p, &x, 0.3);
            assert!(s >= 0.0);
            assert!(s <= exact + 1e-9, "{s} > {exact}");
        }
    }
}
