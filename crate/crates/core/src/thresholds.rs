//! Interpolation thresholds of adversarial training.
//!
//! Below `gamma_min(X)` (l_inf attacks) or `gamma_min(X Q')` (l2 attacks)
//! the adversarial risk is claimed to be minimized on the interpolation set
//! `{beta : X beta = y}`, where `gamma_min` is the smallest-magnitude nonzero
//! entry of a matrix and `Q` has orthonormal rows spanning the rows of `X`.
//!
//! Those bounds are sufficient conditions only. [`exact_thresholds`]
//! computes the largest radius for which the minimum-norm interpolator
//! is still optimal, from the dual of the interpolation problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::solvers;
use crate::types::{Dataset, SolverConfig};

/// Entries with magnitude at or below this count as zero in [`gamma_min`].
pub const ZERO_TOL: f64 = 1e-12;

/// Smallest magnitude among the entries of `m` that exceed [`ZERO_TOL`].
pub fn gamma_min(m: &DMatrix<f64>) -> Result<f64> {
    m.iter()
        .map(|v| v.abs())
        .filter(|&a| a > ZERO_TOL)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::InvalidParameter("matrix has no nonzero entry".into()))
}

/// Orthonormal rows spanning the rows of `x`, from the reduced QR
/// factorization of `x'`. Requires full row rank.
pub fn row_space_basis(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::orthonormal_row_basis(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Bound for l_inf attacks.
    pub gamma_min_x: f64,
    /// Bound for l2 attacks.
    pub gamma_min_xqt: f64,
    /// `n x m`, orthonormal rows.
    #[serde(skip)]
    pub q: DMatrix<f64>,
}

impl ThresholdReport {
    /// Coordinates of the samples in the row basis, `X Q'` (`n x n`).
    pub fn projected_design(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * self.q.transpose()
    }
}

pub fn interpolation_thresholds(data: &Dataset) -> Result<ThresholdReport> {
    let x = data.x();
    let q = row_space_basis(x)?;
    let xqt = x * q.transpose();
    Ok(ThresholdReport {
        gamma_min_x: gamma_min(x)?,
        gamma_min_xqt: gamma_min(&xqt)?,
        q,
    })
}

/// Largest attack radii for which the minimum-norm interpolators remain
/// minimizers of the adversarial risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactThresholds {
    /// For l_inf attacks and the minimum-l1 interpolator.
    pub linf: f64,
    /// For l2 attacks and the minimum-l2 interpolator.
    pub l2: f64,
}

/// At an interpolating `beta` the subdifferential of the adversarial risk
/// contains zero iff `X' s = n delta g` for some `s` in `[-1, 1]^n` and
/// `g` in the subdifferential of `||beta||_q`.
///
/// For l2 this pins `s = n delta (X X')^{-1} y / ||beta||_2`; for l_inf the
/// smallest admissible `||s||_inf` comes from the dual of the minimum-l1
/// problem, `min ||nu||_inf` over its optimal face.
pub fn exact_thresholds(data: &Dataset, config: &SolverConfig) -> Result<ExactThresholds> {
    let x = data.x();
    let y = data.y();
    let n = data.n() as f64;
    linalg::require_full_row_rank(x)?;
    if y.amax() == 0.0 {
        return Ok(ExactThresholds {
            linf: f64::INFINITY,
            l2: f64::INFINITY,
        });
    }

    let gram = x * x.transpose();
    let coef = linalg::spd_solve(&gram, y)
        .ok_or_else(|| Error::Singular("X X' is not positive definite".into()))?;
    let beta_l2: DVector<f64> = x.transpose() * &coef;
    let l2 = beta_l2.norm() / (n * coef.amax());

    let nu_norm = solvers::min_linf_dual_certificate(data, config)?;
    let linf = 1.0 / (n * nu_norm);
    Ok(ExactThresholds { linf, l2 })
}
