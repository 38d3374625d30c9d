//! Adversarial training for linear regression.
//!
//! The adversarial risk of a linear model under per-sample perturbations
//! `||dx_i||_p <= delta` has the closed form
//! `(1/n) sum_i (|y_i - x_i'beta| + delta ||beta||_q)^2` with `1/p + 1/q = 1`.
//! This crate evaluates that risk, constructs the attacks attaining it, fits
//! it alongside lasso, ridge, square-root lasso and minimum-norm
//! interpolators, computes the interpolation thresholds of the adversarial
//! estimator, and drives the synthetic experiments around them.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod objective;
pub mod solvers;
pub mod thresholds;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    validate_dataset, AttackBudget, Dataset, FitResult, Method, NormOrder, RngSeed,
    SmoothingSchedule, SolverConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
