//! Desk-scale objectives with analytic gradients.

pub mod dataset;
pub mod gradcheck;
mod logistic;
mod mlp;
mod quadratic;
mod rosenbrock;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dataset::{generate_dataset, GeneratorSpec, Recipe, Split, SyntheticDataset};
pub use logistic::{LogisticOracle, LogisticProblem};
pub use mlp::{Activation, MlpOracle, MlpProblem};
pub use quadratic::QuadraticProblem;
pub use rosenbrock::RosenbrockProblem;

use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;
use crate::rng::SeededRng;
use crate::vector::ParamVector;

/// Loss applied to the network output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputLoss {
    #[default]
    SoftmaxCrossEntropy,
    /// `½‖z − onehot(label)‖²`.
    SquaredError,
}

impl OutputLoss {
    /// Loss and its derivative with respect to the output values.
    pub fn value_and_delta(self, z: &[f64], label: usize) -> (f64, Vec<f64>) {
        match self {
            OutputLoss::SoftmaxCrossEntropy => {
                let m = z.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
                let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let sum: f64 = exps.iter().sum();
                let loss = sum.ln() + m - z[label];
                let delta = exps
                    .iter()
                    .enumerate()
                    .map(|(i, e)| e / sum - if i == label { 1.0 } else { 0.0 })
                    .collect();
                (loss, delta)
            }
            OutputLoss::SquaredError => {
                let delta: Vec<f64> =
                    z.iter().enumerate().map(|(i, v)| v - if i == label { 1.0 } else { 0.0 }).collect();
                (0.5 * delta.iter().map(|d| d * d).sum::<f64>(), delta)
            }
        }
    }
}

/// Whether `label` is among the `k` largest scores. Equal scores rank the
/// lower class index first, so top-1 is argmax with ties to the lowest index.
pub fn top_k_hit(scores: &[f64], label: usize, k: usize) -> bool {
    let target = scores[label];
    let rank = scores
        .iter()
        .enumerate()
        .filter(|(j, s)| **s > target || (**s == target && *j < label))
        .count();
    rank < k
}

fn default_one() -> f64 {
    1.0
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}

/// Declarative problem description, as found in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    /// Random rotated quadratic with log-spaced spectrum.
    Quadratic {
        dim: usize,
        eig_min: f64,
        eig_max: f64,
        #[serde(default = "default_one")]
        b_scale: f64,
        noise_sigma: f64,
        /// Seeds `A`, `b` and the start point.
        seed: u64,
        #[serde(default = "default_one")]
        x0_scale: f64,
    },
    Rosenbrock {
        dim: usize,
        #[serde(default)]
        noise_sigma: f64,
    },
    Logistic {
        dataset: GeneratorSpec,
        #[serde(default)]
        l2: f64,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        activation: Activation,
        dataset: GeneratorSpec,
    },
}

impl ProblemSpec {
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Quadratic { dim, .. } => format!("quadratic-d{dim}"),
            ProblemSpec::Rosenbrock { dim, .. } => format!("rosenbrock-d{dim}"),
            ProblemSpec::Logistic { dataset, .. } => format!("logistic-{}", recipe_name(dataset)),
            ProblemSpec::Mlp { hidden, dataset, .. } => {
                let h: Vec<String> = hidden.iter().map(|h| h.to_string()).collect();
                format!("mlp{}-{}", h.join("x"), recipe_name(dataset))
            }
        }
    }
}

fn recipe_name(spec: &GeneratorSpec) -> &'static str {
    match spec.recipe {
        Recipe::GaussianBlobs { .. } => "blobs",
        Recipe::TwoSpirals { .. } => "spirals",
    }
}

/// A constructed problem, ready to hand out oracles and start points.
#[derive(Clone, Debug)]
pub enum Problem {
    Quadratic { problem: QuadraticProblem, x0: ParamVector },
    Rosenbrock(RosenbrockProblem),
    Logistic(Arc<LogisticProblem>),
    Mlp(Arc<MlpProblem>),
}

pub type BoxedOracle = Box<dyn StochasticOracle + Send>;

impl Problem {
    pub fn build(spec: &ProblemSpec) -> Result<Self> {
        match spec {
            ProblemSpec::Quadratic { dim, eig_min, eig_max, b_scale, noise_sigma, seed, x0_scale } => {
                let problem = QuadraticProblem::random(*dim, *eig_min, *eig_max, *b_scale, *noise_sigma, *seed)?;
                let mut rng = SeededRng::new(*seed).fork(7);
                let x0 = ParamVector::from((0..*dim).map(|_| x0_scale * rng.normal()).collect::<Vec<_>>());
                Ok(Problem::Quadratic { problem, x0 })
            }
            ProblemSpec::Rosenbrock { dim, noise_sigma } => {
                Ok(Problem::Rosenbrock(RosenbrockProblem::new(*dim, *noise_sigma)?))
            }
            ProblemSpec::Logistic { dataset, l2 } => {
                Ok(Problem::Logistic(Arc::new(LogisticProblem::new(generate_dataset(dataset)?, *l2)?)))
            }
            ProblemSpec::Mlp { hidden, activation, dataset } => {
                let ds = generate_dataset(dataset)?;
                let mut sizes = vec![ds.train.dim];
                sizes.extend(hidden);
                sizes.push(ds.num_classes());
                Ok(Problem::Mlp(Arc::new(MlpProblem::new(sizes, *activation, OutputLoss::SoftmaxCrossEntropy, ds)?)))
            }
        }
    }

    /// A fresh oracle. `batch_size` applies to dataset-backed problems.
    pub fn oracle(&self, batch_size: usize) -> Result<BoxedOracle> {
        Ok(match self {
            Problem::Quadratic { problem, .. } => Box::new(problem.oracle()),
            Problem::Rosenbrock(p) => Box::new(p.clone()),
            Problem::Logistic(p) => Box::new(p.oracle(batch_size)?),
            Problem::Mlp(p) => Box::new(p.oracle(batch_size)?),
        })
    }

    /// Start point. Analytic problems use a fixed point; the MLP draws its
    /// initial weights from `rng`.
    pub fn initial_point(&self, rng: &mut SeededRng) -> ParamVector {
        match self {
            Problem::Quadratic { x0, .. } => x0.clone(),
            Problem::Rosenbrock(p) => p.standard_start(),
            Problem::Logistic(p) => ParamVector::zeros(p.dim()),
            Problem::Mlp(p) => p.initial_params(rng),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Problem::Quadratic { problem, .. } => problem.dim(),
            Problem::Rosenbrock(p) => p.dimension(),
            Problem::Logistic(p) => p.dim(),
            Problem::Mlp(p) => p.num_params(),
        }
    }

    pub fn dataset(&self) -> Option<&SyntheticDataset> {
        match self {
            Problem::Logistic(p) => Some(p.dataset()),
            Problem::Mlp(p) => Some(p.dataset()),
            _ => None,
        }
    }
}

/// Shipped problems used by the `gradcheck` command.
pub fn shipped_problem(name: &str) -> Result<ProblemSpec> {
    let spirals = GeneratorSpec::two_spirals(200, 50, 0.05, 11);
    Ok(match name {
        "quadratic" => ProblemSpec::Quadratic {
            dim: 20,
            eig_min: 0.2,
            eig_max: 1.0,
            b_scale: 1.0,
            noise_sigma: 0.1,
            seed: 1,
            x0_scale: 1.0,
        },
        "rosenbrock" => ProblemSpec::Rosenbrock { dim: 6, noise_sigma: 0.1 },
        "logistic" => ProblemSpec::Logistic { dataset: GeneratorSpec::gaussian_blobs(2, 200, 50, 11), l2: 0.01 },
        "mlp" => ProblemSpec::Mlp { hidden: vec![16], activation: Activation::Tanh, dataset: spirals },
        other => {
            return Err(Error::config(format!(
                "unknown problem `{other}` (expected quadratic, rosenbrock, logistic or mlp)"
            )))
        }
    })
}

pub const SHIPPED_PROBLEMS: [&str; 4] = ["quadratic", "rosenbrock", "logistic", "mlp"];

/// Finite-difference audit of a shipped problem at `points` random points.
pub fn gradcheck_shipped(name: &str, points: usize, seed: u64) -> Result<gradcheck::GradcheckReport> {
    let spec = shipped_problem(name)?;
    let problem = Problem::build(&spec)?;
    let mut oracle = problem.oracle(16)?;
    let mut rng = SeededRng::new(seed);
    let dim = problem.dimension();
    let probes: Vec<ParamVector> = (0..points)
        .map(|_| {
            let scale = if matches!(problem, Problem::Rosenbrock(_)) { 1.5 } else { 1.0 };
            ParamVector::from((0..dim).map(|_| rng.uniform_range(-scale, scale)).collect::<Vec<_>>())
        })
        .collect();
    gradcheck::audit_oracle(
        name,
        oracle.as_mut(),
        &probes,
        gradcheck::DEFAULT_STEP,
        gradcheck::DEFAULT_TOLERANCE,
        &mut rng,
    )
}
