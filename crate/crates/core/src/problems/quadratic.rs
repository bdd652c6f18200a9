//! `f(x) = ½ xᵀAx − bᵀx` with additive Gaussian gradient noise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracle::{Batch, StochasticOracle};
use crate::rng::SeededRng;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    dim: usize,
    /// Row-major `A`.
    a: Vec<f64>,
    b: ParamVector,
    noise_sigma: f64,
    eigenvalues: Vec<f64>,
    f_inf: Option<f64>,
}

impl QuadraticProblem {
    /// `a` is row-major `d × d`, symmetric positive semidefinite.
    pub fn new(a: Vec<f64>, b: ParamVector, noise_sigma: f64) -> Result<Self> {
        let dim = b.dim();
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: a.len() });
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::contract(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (a[i * dim + j] - a[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::contract(format!("A is not symmetric at ({i}, {j})")));
                }
            }
        }
        let m = DMatrix::from_row_slice(dim, dim, &a);
        let mut eigenvalues: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        if eigenvalues[0] < -1e-10 * scale {
            return Err(Error::contract(format!("A is not positive semidefinite (min eigenvalue {})", eigenvalues[0])));
        }
        let f_inf = if eigenvalues[0] > 1e-12 * scale {
            let rhs = DVector::from_column_slice(b.as_slice());
            m.cholesky().map(|c| -0.5 * rhs.dot(&c.solve(&rhs)))
        } else if b.iter().all(|v| *v == 0.0) {
            Some(0.0)
        } else {
            None
        };
        Ok(Self { dim, a, b, noise_sigma, eigenvalues, f_inf })
    }

    /// `A = c I`, `b = 0`.
    pub fn isotropic(dim: usize, curvature: f64, noise_sigma: f64) -> Result<Self> {
        Self::diagonal(&vec![curvature; dim], noise_sigma)
    }

    /// `A = diag(diag)`, `b = 0`.
    pub fn diagonal(diag: &[f64], noise_sigma: f64) -> Result<Self> {
        let d = diag.len();
        let mut a = vec![0.0; d * d];
        for (i, v) in diag.iter().enumerate() {
            a[i * d + i] = *v;
        }
        Self::new(a, ParamVector::zeros(d), noise_sigma)
    }

    /// `A = Q diag(λ) Qᵀ` with eigenvalues log-spaced in `[eig_min, eig_max]`
    /// and `Q` a seeded random rotation; `b` has i.i.d. `N(0, b_scale²)` entries.
    pub fn random(dim: usize, eig_min: f64, eig_max: f64, b_scale: f64, noise_sigma: f64, seed: u64) -> Result<Self> {
        if dim == 0 || !(eig_min > 0.0 && eig_max >= eig_min) {
            return Err(Error::config("random quadratic needs dim >= 1 and 0 < eig_min <= eig_max"));
        }
        let mut rng = SeededRng::new(seed);
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.normal());
        let q = g.qr().q();
        let eig: Vec<f64> = (0..dim)
            .map(|i| {
                if dim == 1 {
                    eig_max
                } else {
                    let t = i as f64 / (dim - 1) as f64;
                    eig_min * (eig_max / eig_min).powf(t)
                }
            })
            .collect();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(eig));
        let m = &q * lam * q.transpose();
        // symmetrize away rounding
        let m = (&m + m.transpose()) * 0.5;
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                a[i * dim + j] = m[(i, j)];
            }
        }
        let b = ParamVector::from((0..dim).map(|_| b_scale * rng.normal()).collect::<Vec<_>>());
        Self::new(a, b, noise_sigma)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &ParamVector {
        &self.b
    }

    fn apply(&self, x: &ParamVector) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| self.a[i * d..(i + 1) * d].iter().zip(x.iter()).map(|(aij, xj)| aij * xj).sum()).collect()
    }

    fn value_and_gradient(&self, x: &ParamVector) -> Result<(f64, ParamVector)> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let ax = self.apply(x);
        let quad: f64 = ax.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        let lin: f64 = self.b.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        let grad: Vec<f64> = ax.iter().zip(self.b.iter()).map(|(a, b)| a - b).collect();
        Ok((0.5 * quad - lin, ParamVector::from(grad)))
    }

    pub fn oracle(&self) -> QuadraticProblem {
        self.clone()
    }
}

impl StochasticOracle for QuadraticProblem {
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
        let sigma = self.noise_sigma;
        Batch::Noise(ParamVector::from((0..self.dim).map(|_| sigma * rng.normal()).collect::<Vec<_>>()))
    }

    /// On a noise batch `ξ` the loss is `f(x) + ξᵀx`, so its gradient is `∇f(x) + ξ`.
    fn batch_loss_gradient(&self, x: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        let (f, g) = self.value_and_gradient(x)?;
        match batch {
            Batch::Exact => Ok((f, g)),
            Batch::Noise(xi) => Ok((f + xi.dot(x)?, g.add(xi)?)),
            Batch::Indices(_) => Err(Error::contract("quadratic oracle does not take index batches")),
        }
    }

    fn lipschitz_constant(&self) -> Option<f64> {
        self.eigenvalues.last().copied().filter(|l| *l > 0.0)
    }

    fn noise_bound(&self) -> Option<f64> {
        Some((self.dim as f64).sqrt() * self.noise_sigma)
    }

    fn lower_bound(&self) -> Option<f64> {
        self.f_inf
    }
}
