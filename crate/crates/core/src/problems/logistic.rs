//! L2-regularized binary logistic regression on a two-class dataset.
//!
//! `f(w) = (1/n) Σ log(1 + exp(−s_i wᵀa_i)) + (l2/2)‖w‖²` with `s_i = ±1`
//! and `a_i` the sample features followed by a constant 1 (bias).
//! The Hessian is `(1/n) Σ σ'(·) a_i a_iᵀ + l2 I` with `σ' ≤ 1/4`, hence
//! `L ≤ ‖A‖²_op / (4n) + l2`, where `A` stacks the augmented samples.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::dataset::{Split, SyntheticDataset};
use crate::error::{Error, Result};
use crate::oracle::{Batch, Classifier, EpochSampler, StochasticOracle};
use crate::rng::SeededRng;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct LogisticProblem {
    dataset: SyntheticDataset,
    l2_coeff: f64,
    lipschitz: f64,
}

impl LogisticProblem {
    pub fn new(dataset: SyntheticDataset, l2_coeff: f64) -> Result<Self> {
        if dataset.num_classes() != 2 {
            return Err(Error::config("logistic regression needs a two-class dataset"));
        }
        if !(l2_coeff >= 0.0 && l2_coeff.is_finite()) {
            return Err(Error::config("l2 coefficient must be >= 0"));
        }
        let train = &dataset.train;
        let d = train.dim + 1;
        let a = DMatrix::from_fn(train.len(), d, |i, j| if j < train.dim { train.sample(i)[j] } else { 1.0 });
        let gram = a.transpose() * &a;
        let op_sq = gram.symmetric_eigenvalues().iter().fold(0.0_f64, |m, v| m.max(*v));
        let lipschitz = op_sq / (4.0 * train.len() as f64) + l2_coeff;
        Ok(Self { dataset, l2_coeff, lipschitz })
    }

    pub fn dim(&self) -> usize {
        self.dataset.train.dim + 1
    }

    pub fn dataset(&self) -> &SyntheticDataset {
        &self.dataset
    }

    pub fn oracle(self: &Arc<Self>, batch_size: usize) -> Result<LogisticOracle> {
        Ok(LogisticOracle {
            problem: Arc::clone(self),
            sampler: EpochSampler::new(self.dataset.train.len(), batch_size)?,
        })
    }

    fn margin(&self, w: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
    }

    fn mean_loss_gradient(&self, w: &ParamVector, split: &Split, idx: impl ExactSizeIterator<Item = usize>) -> Result<(f64, ParamVector)> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: w.dim() });
        }
        let n = idx.len();
        if n == 0 {
            return Err(Error::contract("empty batch"));
        }
        let w_s = w.as_slice();
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for i in idx {
            let x = split.sample(i);
            let s = if split.labels[i] == 1 { 1.0 } else { -1.0 };
            let m = s * self.margin(w_s, x);
            // log(1 + e^{−m}) evaluated without overflow
            loss += if m > 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
            // d/dm log(1 + e^{−m}) = −1 / (1 + e^{m})
            let coef = -s / (1.0 + m.exp());
            for (g, xj) in grad.iter_mut().zip(x) {
                *g += coef * xj;
            }
            grad[split.dim] += coef;
        }
        let inv = 1.0 / n as f64;
        for (g, wj) in grad.iter_mut().zip(w_s) {
            *g = *g * inv + self.l2_coeff * wj;
        }
        let reg = 0.5 * self.l2_coeff * w.norm_squared();
        Ok((loss * inv + reg, ParamVector::from(grad)))
    }

    fn accuracy(&self, w: &ParamVector, split: &Split, k: usize) -> f64 {
        if k >= 2 {
            return 1.0;
        }
        let hits = (0..split.len())
            .filter(|&i| {
                // ties go to class 0, the lower index
                let predicted = usize::from(self.margin(w.as_slice(), split.sample(i)) > 0.0);
                predicted == split.labels[i]
            })
            .count();
        hits as f64 / split.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct LogisticOracle {
    problem: Arc<LogisticProblem>,
    sampler: EpochSampler,
}

impl StochasticOracle for LogisticOracle {
    fn dimension(&self) -> usize {
        self.problem.dim()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        let train = &self.problem.dataset.train;
        Ok(self.problem.mean_loss_gradient(x, train, 0..train.len())?.0)
    }

    fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        let train = &self.problem.dataset.train;
        Ok(self.problem.mean_loss_gradient(x, train, 0..train.len())?.1)
    }

    fn draw_batch(&mut self, rng: &mut SeededRng) -> Batch {
        Batch::Indices(self.sampler.next_batch(rng))
    }

    fn batch_loss_gradient(&self, x: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        let train = &self.problem.dataset.train;
        match batch {
            Batch::Indices(idx) => {
                if let Some(bad) = idx.iter().find(|i| **i >= train.len()) {
                    return Err(Error::contract(format!("sample index {bad} out of range")));
                }
                self.problem.mean_loss_gradient(x, train, idx.iter().copied())
            }
            Batch::Exact => self.problem.mean_loss_gradient(x, train, 0..train.len()),
            Batch::Noise(_) => Err(Error::contract("logistic oracle takes index batches")),
        }
    }

    fn lipschitz_constant(&self) -> Option<f64> {
        Some(self.problem.lipschitz)
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn batches_per_pass(&self) -> Option<usize> {
        Some(self.sampler.batches_per_pass())
    }

    fn classifier(&self) -> Option<&dyn Classifier> {
        Some(self)
    }
}

impl Classifier for LogisticOracle {
    fn num_classes(&self) -> usize {
        2
    }

    fn train_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64> {
        Ok(self.problem.accuracy(x, &self.problem.dataset.train, k))
    }

    fn test_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64> {
        Ok(self.problem.accuracy(x, &self.problem.dataset.test, k))
    }

    fn test_loss(&self, x: &ParamVector) -> Result<f64> {
        let test = &self.problem.dataset.test;
        Ok(self.problem.mean_loss_gradient(x, test, 0..test.len())?.0 - 0.5 * self.problem.l2_coeff * x.norm_squared())
    }
}
