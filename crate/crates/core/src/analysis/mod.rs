//! Convergence-bound calculator, empirical bound checks, rate fitting and
//! sharpness diagnostics.

mod bound;
mod inequalities;
mod rate;
mod sharpness;

pub use bound::{theorem1_bound, theorem1_perturbed_bound, BoundInputs, BoundTerms};
pub use inequalities::{check_proof_inequalities, InequalityCheck, InequalityReport};
pub use rate::{empirical_avg_sq_grad, empirical_avg_sq_perturbed_grad, fit_rate, min_so_far, RateFit};
pub use sharpness::estimate_sharpness;
