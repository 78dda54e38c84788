//! Learning schemes for the L1-regularised objective.
//!
//! * `adam_f`: Adam on the loss plus a per-array Frobenius-norm surrogate.
//! * `adam_pw`: Adam on the loss plus the piecewise L1 derivative (0 at 0).
//! * `pg`: proximal gradient (ISTA), a plain gradient step then soft-thresholding.
//! * `apg`: accelerated proximal gradient (FISTA) with `(k-2)/(k+1)` momentum.
//!
//! [`convex`] checks the classical ISTA/FISTA rates on small lasso problems.

pub mod convex;
mod prox;
mod state;

pub use prox::{fnorm_gradient, l1_subgradient, soft_threshold, soft_threshold_in_place, FNORM_GUARD};
pub use state::{adam_reg_step, apg_step, pg_step, AdamMoments, OptimizerKind, OptimizerState, Regularizer};
