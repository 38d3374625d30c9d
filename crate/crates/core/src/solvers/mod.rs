//! Estimators and their optimality certificates.

mod adversarial;
mod closed_form;
pub(crate) mod conic;
mod face;
mod interp;
mod lasso;
mod smoothing;
mod sqrt_lasso;
pub(crate) mod subgradient;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use adversarial::{adversarial_zero_threshold, fit_adversarial, fit_adversarial_warm};
pub use closed_form::{fit_ols, fit_ridge, min_l2_interpolator, ridge_system_residual};
pub use interp::{min_l1_interpolator, min_linf_dual_certificate};
pub use lasso::{fit_lasso, fit_lasso_warm, lasso_delta_max, lasso_kkt_residual};
pub use smoothing::fit_adversarial_smoothed;
pub use sqrt_lasso::{
    fit_sqrt_lasso, fit_sqrt_lasso_warm, sqrt_lasso_stationarity, sqrt_lasso_zero_threshold,
};

use crate::error::{Error, Result};
use crate::types::{AttackBudget, Dataset, FitResult, Method, SolverConfig};

/// Estimator family selected by an [`EstimatorSpec`].
pub type EstimatorKind = Method;

/// Everything needed to fit one estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Required for adversarial training.
    pub budget: Option<AttackBudget>,
    /// Regularization strength for lasso, ridge and square-root lasso.
    pub delta: f64,
    pub config: SolverConfig,
}

impl EstimatorSpec {
    pub fn adversarial(budget: AttackBudget) -> Self {
        EstimatorSpec {
            kind: Method::Adversarial,
            budget: Some(budget),
            delta: budget.delta(),
            config: SolverConfig::default(),
        }
    }

    pub fn penalized(kind: EstimatorKind, delta: f64) -> Self {
        EstimatorSpec {
            kind,
            budget: None,
            delta,
            config: SolverConfig::default(),
        }
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and nonnegative, got {}",
                self.delta
            )));
        }
        if self.kind == Method::Adversarial && self.budget.is_none() {
            return Err(Error::InvalidParameter(
                "adversarial training needs an attack budget".into(),
            ));
        }
        Ok(())
    }
}

pub fn fit(data: &Dataset, spec: &EstimatorSpec) -> Result<FitResult> {
    fit_warm(data, spec, None)
}

/// [`fit`] with an initial point for the iterative estimators; ignored by
/// the others.
pub fn fit_warm(
    data: &Dataset,
    spec: &EstimatorSpec,
    warm: Option<&DVector<f64>>,
) -> Result<FitResult> {
    spec.validate()?;
    let cfg = &spec.config;
    match spec.kind {
        Method::Adversarial => {
            let budget = spec.budget.expect("validated");
            fit_adversarial_warm(data, &budget, cfg, warm)
        }
        Method::Lasso => fit_lasso_warm(data, spec.delta, cfg, warm),
        Method::Ridge => fit_ridge(data, spec.delta),
        Method::SqrtLasso => fit_sqrt_lasso_warm(data, spec.delta, cfg, warm),
        Method::Ols => fit_ols(data),
        Method::MinL1Interp => min_l1_interpolator(data, cfg),
        Method::MinL2Interp => min_l2_interpolator(data),
    }
}
