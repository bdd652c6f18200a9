//! The stochastic first-order oracle contract.
//!
//! An oracle evaluates a loss `f(x)`, its gradient, and minibatch gradients
//! `g(x)`. Batch selection is split from gradient evaluation so that an
//! optimizer can evaluate `g` at `x` and at `x + eps` on the same batch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::vector::{norm, ParamVector};

/// One draw of the sampling randomness.
#[derive(Clone, Debug, PartialEq)]
pub enum Batch {
    /// Noiseless evaluation: the batch gradient is the full gradient.
    Exact,
    /// A subset of training-sample indices.
    Indices(Vec<usize>),
    /// Additive gradient noise shared by every evaluation on this batch.
    Noise(ParamVector),
}

pub trait StochasticOracle {
    fn dimension(&self) -> usize;

    /// Full-data loss `f(x)`.
    fn loss(&self, x: &ParamVector) -> Result<f64>;

    /// Full-data gradient `∇f(x)`.
    fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector>;

    /// Draws the next batch. Dataset oracles walk a seeded shuffle without
    /// replacement and reshuffle once per pass.
    fn draw_batch(&mut self, rng: &mut SeededRng) -> Batch;

    /// Loss and gradient on a given batch. The returned gradient is
    /// the exact derivative of the returned loss.
    fn batch_loss_gradient(&self, x: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)>;

    /// Convenience: draw a batch and return its gradient.
    fn stochastic_gradient(&mut self, x: &ParamVector, rng: &mut SeededRng) -> Result<ParamVector> {
        let batch = self.draw_batch(rng);
        Ok(self.batch_loss_gradient(x, &batch)?.1)
    }

    /// Lipschitz constant `L` of the gradient, when known.
    fn lipschitz_constant(&self) -> Option<f64> {
        None
    }

    /// Bound `σ` with `E‖g(x) − ∇f(x)‖² ≤ σ²`, when known.
    fn noise_bound(&self) -> Option<f64> {
        None
    }

    /// Lower bound `f_inf` of the loss, when known.
    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Number of batches in one pass over the data, for dataset-backed oracles.
    fn batches_per_pass(&self) -> Option<usize> {
        None
    }

    /// Classification view of the oracle, if it has one.
    fn classifier(&self) -> Option<&dyn Classifier> {
        None
    }
}

/// Accuracy evaluation for oracles backed by a labeled dataset.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    /// Top-`k` accuracy of parameters `x` on the training split.
    fn train_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64>;

    /// Top-`k` accuracy of parameters `x` on the held-out split.
    fn test_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64>;

    fn test_loss(&self, x: &ParamVector) -> Result<f64>;
}

/// Shuffled minibatches without replacement; one reshuffle per pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochSampler {
    n: usize,
    batch_size: usize,
    order: Vec<usize>,
    cursor: usize,
}

impl EpochSampler {
    pub fn new(n: usize, batch_size: usize) -> Result<Self> {
        if batch_size == 0 || n == 0 {
            return Err(Error::contract("empty batch"));
        }
        if batch_size > n {
            return Err(Error::contract(format!("batch size {batch_size} exceeds data size {n}")));
        }
        Ok(Self { n, batch_size, order: (0..n).collect(), cursor: n })
    }

    pub fn batches_per_pass(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn next_batch(&mut self, rng: &mut SeededRng) -> Vec<usize> {
        if self.batch_size == self.n {
            // full batch: order is irrelevant to the mean, keep it canonical
            return (0..self.n).collect();
        }
        if self.cursor >= self.n {
            rng.shuffle(&mut self.order);
            self.cursor = 0;
        }
        let end = (self.cursor + self.batch_size).min(self.n);
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        batch
    }
}

/// Largest observed `‖∇f(x) − ∇f(y)‖ / ‖x − y‖` over the given pairs.
pub fn max_gradient_lipschitz_ratio<O: StochasticOracle + ?Sized>(
    oracle: &O,
    pairs: &[(ParamVector, ParamVector)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, y) in pairs {
        let dx = norm(&x.sub(y)?)?;
        if dx == 0.0 {
            continue;
        }
        let dg = norm(&oracle.full_gradient(x)?.sub(&oracle.full_gradient(y)?)?)?;
        worst = worst.max(dg / dx);
    }
    Ok(worst)
}

/// `‖mean of n stochastic gradients at x − ∇f(x)‖`.
pub fn gradient_mean_error<O: StochasticOracle + ?Sized>(
    oracle: &mut O,
    x: &ParamVector,
    n: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let mut sum = vec![0.0; oracle.dimension()];
    for _ in 0..n {
        let g = oracle.stochastic_gradient(x, rng)?;
        for (s, gi) in sum.iter_mut().zip(g.iter()) {
            *s += gi;
        }
    }
    let mean = ParamVector::from(sum.into_iter().map(|s| s / n as f64).collect::<Vec<_>>());
    norm(&mean.sub(&oracle.full_gradient(x)?)?)
}
