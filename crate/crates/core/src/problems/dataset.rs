//! Seeded synthetic classification datasets and their CSV form.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum Recipe {
    /// Isotropic Gaussian clusters around seeded centers.
    GaussianBlobs {
        classes: usize,
        #[serde(default = "default_blob_dim")]
        dim: usize,
        #[serde(default = "default_spread")]
        spread: f64,
    },
    /// Two interleaved spirals in the plane, with Gaussian jitter.
    TwoSpirals {
        #[serde(default = "default_spiral_noise")]
        noise: f64,
        #[serde(default = "default_turns")]
        turns: f64,
        /// Multiplies every coordinate, jitter included.
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

fn default_blob_dim() -> usize {
    2
}
fn default_spread() -> f64 {
    1.0
}
fn default_spiral_noise() -> f64 {
    0.05
}
fn default_scale() -> f64 {
    8.0
}
fn default_turns() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub recipe: Recipe,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn two_spirals(train_size: usize, test_size: usize, noise: f64, seed: u64) -> Self {
        Self { recipe: Recipe::TwoSpirals { noise, turns: default_turns(), scale: default_scale() }, train_size, test_size, seed }
    }

    pub fn gaussian_blobs(classes: usize, train_size: usize, test_size: usize, seed: u64) -> Self {
        Self {
            recipe: Recipe::GaussianBlobs { classes, dim: 2, spread: 1.0 },
            train_size,
            test_size,
            seed,
        }
    }

    /// Resolves a recipe by name, as used on the command line.
    pub fn named(name: &str, train_size: usize, test_size: usize, seed: u64) -> Result<Self> {
        match name {
            "two-spirals" => Ok(Self::two_spirals(train_size, test_size, default_spiral_noise(), seed)),
            "gaussian-blobs" => Ok(Self::gaussian_blobs(2, train_size, test_size, seed)),
            other => Err(Error::config(format!("unknown dataset recipe `{other}`"))),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self.recipe {
            Recipe::GaussianBlobs { classes, .. } => classes,
            Recipe::TwoSpirals { .. } => 2,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.recipe {
            Recipe::GaussianBlobs { dim, .. } => dim,
            Recipe::TwoSpirals { .. } => 2,
        }
    }
}

/// Row-major features with integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for l in &self.labels {
            counts[*l] += 1;
        }
        counts
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.sample(i).iter().map(|v| format!("{v:?}")).collect();
            row.push(self.labels[i].to_string());
            w.write_record(&row).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.len() < 2 || &headers[headers.len() - 1] != "label" {
            return Err(Error::config(format!("{}: expected columns x0..,label", path.display())));
        }
        let dim = headers.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            for j in 0..dim {
                let v: f64 = rec[j]
                    .parse()
                    .map_err(|_| Error::config(format!("{}: bad feature `{}`", path.display(), &rec[j])))?;
                features.push(v);
            }
            let l: usize = rec[dim]
                .parse()
                .map_err(|_| Error::config(format!("{}: bad label `{}`", path.display(), &rec[dim])))?;
            labels.push(l);
        }
        Ok(Self { dim, features, labels })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub spec: GeneratorSpec,
    pub train: Split,
    pub test: Split,
}

impl SyntheticDataset {
    pub fn num_classes(&self) -> usize {
        self.spec.num_classes()
    }

    /// Writes `<prefix>_train.csv` and `<prefix>_test.csv` into `dir`.
    pub fn export_csv(&self, dir: &Path, prefix: &str) -> Result<()> {
        self.train.write_csv(&dir.join(format!("{prefix}_train.csv")))?;
        self.test.write_csv(&dir.join(format!("{prefix}_test.csv")))
    }
}

/// Builds the dataset described by `spec`. Labels cycle through the classes,
/// so class counts in each split differ by at most one.
pub fn generate_dataset(spec: &GeneratorSpec) -> Result<SyntheticDataset> {
    let classes = spec.num_classes();
    if classes < 2 {
        return Err(Error::config("a dataset needs at least 2 classes"));
    }
    if spec.train_size < 2 * classes || spec.test_size < 2 * classes {
        return Err(Error::config("each split needs at least 2 samples per class"));
    }
    let root = SeededRng::new(spec.seed);
    let mut train_rng = root.fork(1);
    let mut test_rng = root.fork(2);
    let (train, test) = match &spec.recipe {
        Recipe::GaussianBlobs { classes, dim, spread } => {
            if *dim == 0 || !(*spread > 0.0) {
                return Err(Error::config("gaussian-blobs needs dim >= 1 and spread > 0"));
            }
            let mut center_rng = root.fork(0);
            let centers: Vec<f64> = (0..classes * dim).map(|_| 3.0 * center_rng.normal()).collect();
            let draw = |n: usize, rng: &mut SeededRng| {
                let mut features = Vec::with_capacity(n * dim);
                let mut labels = Vec::with_capacity(n);
                for i in 0..n {
                    let c = i % classes;
                    for j in 0..*dim {
                        features.push(centers[c * dim + j] + spread * rng.normal());
                    }
                    labels.push(c);
                }
                Split { dim: *dim, features, labels }
            };
            (draw(spec.train_size, &mut train_rng), draw(spec.test_size, &mut test_rng))
        }
        Recipe::TwoSpirals { noise, turns, scale } => {
            if !(*noise >= 0.0) || !(*turns > 0.0) || !(*scale > 0.0) {
                return Err(Error::config("two-spirals needs noise >= 0, turns > 0 and scale > 0"));
            }
            let draw = |n: usize, rng: &mut SeededRng| {
                let mut features = Vec::with_capacity(2 * n);
                let mut labels = Vec::with_capacity(n);
                for i in 0..n {
                    let c = i % 2;
                    // sqrt keeps the point density uniform along the arms
                    let t = rng.uniform().sqrt();
                    let angle = turns * 2.0 * PI * t + c as f64 * PI;
                    let r = 0.05 + t;
                    features.push(scale * (r * angle.cos() + noise * rng.normal()));
                    features.push(scale * (r * angle.sin() + noise * rng.normal()));
                    labels.push(c);
                }
                Split { dim: 2, features, labels }
            };
            (draw(spec.train_size, &mut train_rng), draw(spec.test_size, &mut test_rng))
        }
    };
    Ok(SyntheticDataset { spec: spec.clone(), train, test })
}
