//! SAMAR, a sharpness-aware optimizer that blends the plain and perturbed
//! gradients with a weight adapted to the trend of the gradient norm.
//!
//! The crate bundles four first-order optimizers (SGD, SAM, SAMAR and VaSSO)
//! behind one step interface, a set of desk-scale objectives with analytic
//! gradients, learning-rate schedules, a calculator for the nonconvex
//! convergence bound of SAMAR together with empirical checks of it, and a
//! seeded experiment harness that writes CSV/JSON reports.
//!
//! ```
//! use samar::optim::{samar_step, SamarConfig, SamarState};
//! use samar::problems::QuadraticProblem;
//! use samar::{ParamVector, SeededRng};
//!
//! let problem = QuadraticProblem::isotropic(2, 1.0, 0.0).unwrap();
//! let mut oracle = problem.oracle();
//! let mut rng = SeededRng::new(7);
//! let cfg = SamarConfig::default();
//! let state = SamarState::new(ParamVector::from(vec![1.0, -2.0]), &cfg).unwrap();
//! let (next, record) = samar_step(state, &mut oracle, 0.1, &cfg, &mut rng).unwrap();
//! assert_eq!(next.step_index, 1);
//! assert!(record.loss > 0.0);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod optim;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod schedule;
pub mod vector;

pub use error::{Error, Result};
pub use oracle::{Batch, StochasticOracle};
pub use rng::SeededRng;
pub use vector::{axpy, norm, ParamVector};
