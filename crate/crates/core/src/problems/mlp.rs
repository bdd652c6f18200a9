//! A small fully connected network trained on a synthetic dataset, with
//! gradients from hand-written backpropagation.
//!
//! Parameters are flattened layer by layer as `W_l` (row-major,
//! `out × in`) followed by `b_l`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dataset::{Split, SyntheticDataset};
use super::{top_k_hit, OutputLoss};
use crate::error::{Error, Result};
use crate::oracle::{Batch, Classifier, EpochSampler, StochasticOracle};
use crate::rng::SeededRng;
use crate::vector::ParamVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MlpProblem {
    layer_sizes: Vec<usize>,
    activation: Activation,
    loss: OutputLoss,
    dataset: SyntheticDataset,
}

impl MlpProblem {
    /// `layer_sizes = [d_in, h_1, …, classes]`.
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, loss: OutputLoss, dataset: SyntheticDataset) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::config("an MLP needs at least an input and an output layer, all non-empty"));
        }
        if layer_sizes[0] != dataset.train.dim {
            return Err(Error::config(format!(
                "input width {} does not match dataset dimension {}",
                layer_sizes[0], dataset.train.dim
            )));
        }
        if *layer_sizes.last().unwrap() != dataset.num_classes() {
            return Err(Error::config(format!(
                "output width {} does not match {} classes",
                layer_sizes.last().unwrap(),
                dataset.num_classes()
            )));
        }
        Ok(Self { layer_sizes, activation, loss, dataset })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn dataset(&self) -> &SyntheticDataset {
        &self.dataset
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn initial_params(&self, rng: &mut SeededRng) -> ParamVector {
        let mut params = Vec::with_capacity(self.num_params());
        for w in self.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.uniform_range(-limit, limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        ParamVector::from(params)
    }

    pub fn oracle(self: &Arc<Self>, batch_size: usize) -> Result<MlpOracle> {
        let sampler = EpochSampler::new(self.dataset.train.len(), batch_size)?;
        Ok(MlpOracle { problem: Arc::clone(self), sampler })
    }

    /// Output-layer values for one input.
    pub fn logits(&self, params: &ParamVector, input: &[f64]) -> Vec<f64> {
        let acts = self.forward(params.as_slice(), input);
        acts.into_iter().last().unwrap()
    }

    /// Activations of every layer, input first. The last entry holds the
    /// raw output-layer values.
    fn forward(&self, p: &[f64], input: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.layer_sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &p[offset..offset + n_in * n_out];
            let bias = &p[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let prev = &acts[l];
            let last = l + 1 == n_layers;
            let out: Vec<f64> = (0..n_out)
                .map(|i| {
                    let z = bias[i] + weights[i * n_in..(i + 1) * n_in].iter().zip(prev).map(|(a, b)| a * b).sum::<f64>();
                    if last {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Adds this sample's loss gradient to `grad` and returns its loss.
    fn backprop(&self, p: &[f64], input: &[f64], label: usize, grad: &mut [f64]) -> f64 {
        let acts = self.forward(p, input);
        let (loss, mut delta) = self.loss.value_and_delta(acts.last().unwrap(), label);
        let sizes = &self.layer_sizes;
        let mut offsets: Vec<usize> = Vec::with_capacity(sizes.len() - 1);
        let mut off = 0;
        for w in sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        for l in (0..sizes.len() - 1).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let o = offsets[l];
            let prev = &acts[l];
            for i in 0..n_out {
                let d = delta[i];
                let row = &mut grad[o + i * n_in..o + (i + 1) * n_in];
                for (gij, aj) in row.iter_mut().zip(prev) {
                    *gij += d * aj;
                }
                grad[o + n_in * n_out + i] += d;
            }
            if l > 0 {
                let weights = &p[o..o + n_in * n_out];
                delta = (0..n_in)
                    .map(|j| {
                        let back: f64 = (0..n_out).map(|i| weights[i * n_in + j] * delta[i]).sum();
                        back * self.activation.derivative_from_output(prev[j])
                    })
                    .collect();
            }
        }
        loss
    }

    fn check_params(&self, x: &ParamVector) -> Result<()> {
        if x.dim() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), found: x.dim() });
        }
        Ok(())
    }

    fn mean_loss_gradient(&self, x: &ParamVector, split: &Split, indices: impl ExactSizeIterator<Item = usize>) -> Result<(f64, ParamVector)> {
        self.check_params(x)?;
        let n = indices.len();
        if n == 0 {
            return Err(Error::contract("empty batch"));
        }
        let mut grad = vec![0.0; self.num_params()];
        let mut loss = 0.0;
        for i in indices {
            loss += self.backprop(x.as_slice(), split.sample(i), split.labels[i], &mut grad);
        }
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((loss * inv, ParamVector::from(grad)))
    }

    fn mean_loss(&self, x: &ParamVector, split: &Split) -> Result<f64> {
        self.check_params(x)?;
        let total: f64 = (0..split.len())
            .map(|i| {
                let logits = self.logits(x, split.sample(i));
                self.loss.value_and_delta(&logits, split.labels[i]).0
            })
            .sum();
        Ok(total / split.len() as f64)
    }

    fn accuracy(&self, x: &ParamVector, split: &Split, k: usize) -> Result<f64> {
        self.check_params(x)?;
        let hits = (0..split.len()).filter(|&i| top_k_hit(&self.logits(x, split.sample(i)), split.labels[i], k)).count();
        Ok(hits as f64 / split.len() as f64)
    }
}

/// Minibatch oracle over the training split.
#[derive(Clone, Debug)]
pub struct MlpOracle {
    problem: Arc<MlpProblem>,
    sampler: EpochSampler,
}

impl MlpOracle {
    pub fn problem(&self) -> &MlpProblem {
        &self.problem
    }
}

impl StochasticOracle for MlpOracle {
    fn dimension(&self) -> usize {
        self.problem.num_params()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        self.problem.mean_loss(x, &self.problem.dataset.train)
    }

    /// The all-data batch gradient.
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
            Batch::Noise(_) => Err(Error::contract("MLP oracle takes index batches")),
        }
    }

    fn batches_per_pass(&self) -> Option<usize> {
        Some(self.sampler.batches_per_pass())
    }

    fn classifier(&self) -> Option<&dyn Classifier> {
        Some(self)
    }
}

impl Classifier for MlpOracle {
    fn num_classes(&self) -> usize {
        self.problem.dataset.num_classes()
    }

    fn train_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64> {
        self.problem.accuracy(x, &self.problem.dataset.train, k)
    }

    fn test_accuracy(&self, x: &ParamVector, k: usize) -> Result<f64> {
        self.problem.accuracy(x, &self.problem.dataset.test, k)
    }

    fn test_loss(&self, x: &ParamVector) -> Result<f64> {
        self.problem.mean_loss(x, &self.problem.dataset.test)
    }
}
