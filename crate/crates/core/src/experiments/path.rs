//! Regularization paths over a grid of `delta` and the empirical
//! interpolation threshold read off them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::metrics::{mse, nonzero_count};
use crate::error::{Error, Result};
use crate::objective::adv_risk;
use crate::solvers::{fit_warm, EstimatorSpec};
use crate::types::{AttackBudget, Dataset, Method, NormOrder, SolverConfig};

pub const DEFAULT_GRID_MIN: f64 = 1e-4;
pub const DEFAULT_GRID_MAX: f64 = 1e2;
pub const DEFAULT_GRID_SIZE: usize = 200;
/// Train MSE below which a fit counts as interpolating.
pub const TRANSITION_TOL: f64 = 1e-6;

/// `size` points equally spaced in log scale from `min` to `max`, ascending.
pub fn log_grid(min: f64, max: f64, size: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || size == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid needs 0 < min <= max and size >= 1, got [{min}, {max}] x {size}"
        )));
    }
    if size == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.log10(), max.log10());
    let step = (b - a) / (size - 1) as f64;
    let mut grid: Vec<f64> = (0..size).map(|k| 10f64.powf(a + step * k as f64)).collect();
    grid[0] = min;
    grid[size - 1] = max;
    Ok(grid)
}

pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_SIZE).expect("valid constants")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub delta: f64,
    pub beta: Vec<f64>,
    pub train_mse: f64,
    /// Adversarial risk at `delta` for the path's attack norm.
    pub train_adv_objective: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub nonzero_count: usize,
    pub converged: bool,
}

/// Fits `kind` at every grid point, largest `delta` first, warm-starting
/// each fit from the previous solution. `p` selects the attack norm of
/// adversarial training and of the reported adversarial objective.
///
/// Records are returned in fitting order (descending `delta`).
pub fn regularization_path(
    data: &Dataset,
    kind: Method,
    p: NormOrder,
    grid: &[f64],
    config: &SolverConfig,
) -> Result<Vec<PathRecord>> {
    if grid.is_empty() {
        return Err(Error::Empty("delta grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "grid values must be positive and finite, got {bad}"
        )));
    }
    let mut deltas = grid.to_vec();
    deltas.sort_by(|a, b| b.total_cmp(a));

    let mut warm: Option<DVector<f64>> = None;
    let mut records = Vec::with_capacity(deltas.len());
    for delta in deltas {
        let budget = AttackBudget::new(delta, p)?;
        let spec = EstimatorSpec {
            kind,
            budget: Some(budget),
            delta,
            config: *config,
        };
        let fit = fit_warm(data, &spec, warm.as_ref())?;
        let beta = fit.beta_vector();
        records.push(PathRecord {
            delta,
            train_mse: mse(&beta, data)?,
            train_adv_objective: adv_risk(&beta, data, &budget)?,
            l1_norm: beta.lp_norm(1),
            l2_norm: beta.norm(),
            nonzero_count: nonzero_count(&beta),
            converged: fit.converged,
            beta: fit.beta,
        });
        warm = Some(beta);
    }
    Ok(records)
}

/// Largest grid `delta` such that it and every smaller grid `delta` have
/// `train_mse <= tol`; zero when the smallest one already fails.
pub fn detect_interpolation_transition(path: &[PathRecord], tol: f64) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::Empty("path is empty".into()));
    }
    let mut sorted: Vec<&PathRecord> = path.iter().collect();
    sorted.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let mut threshold = 0.0;
    for rec in sorted {
        if rec.train_mse <= tol {
            threshold = rec.delta;
        } else {
            break;
        }
    }
    Ok(threshold)
}
