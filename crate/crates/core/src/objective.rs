//! Adversarial and robust risks, worst-case attacks, subgradients and
//! interpolation-optimality certificates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::solvers::subgradient::min_norm_element;
use crate::thresholds;
use crate::types::{AttackBudget, Dataset, NormOrder};

/// Absolute tolerance on `|y_i - x_i'beta|` for a sample to count as
/// interpolated.
pub const INTERPOLATION_TOL: f64 = 1e-6;

fn sign_or_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sign_or_one(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Per-sample dual terms `|r_i| + delta ||beta||_q`.
fn dual_terms(beta: &DVector<f64>, data: &Dataset, budget: &AttackBudget) -> Result<DVector<f64>> {
    let r = data.residuals(beta)?;
    let penalty = budget.delta() * budget.p().dual_norm(beta);
    Ok(r.map(|ri| ri.abs() + penalty))
}

/// Empirical adversarial risk in closed form,
/// `(1/n) sum_i (|y_i - x_i'beta| + delta ||beta||_q)^2`.
pub fn adv_risk(beta: &DVector<f64>, data: &Dataset, budget: &AttackBudget) -> Result<f64> {
    let f = dual_terms(beta, data, budget)?;
    Ok(f.norm_squared() / data.n() as f64)
}

/// A perturbation of one sample together with the absolute residual it
/// attains.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector {
    pub delta_x: DVector<f64>,
    pub attained_value: f64,
}

/// The perturbation `dx` with `||dx||_p <= delta` maximizing
/// `|y - (x + dx)'beta|`: it aligns with `beta` in the Hölder-equality
/// sense and pushes against the sign of the residual.
pub fn worst_case_attack(
    beta: &DVector<f64>,
    x: &DVector<f64>,
    y: f64,
    budget: &AttackBudget,
) -> Result<AttackVector> {
    if beta.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients have length {} but the sample has {}",
            beta.len(),
            x.len()
        )));
    }
    let delta = budget.delta();
    let direction = -sign_or_one(y - x.dot(beta));
    let delta_x = match budget.p() {
        NormOrder::LInf => beta.map(|b| direction * delta * sign_or_zero(b)),
        NormOrder::L2 => {
            let norm = beta.norm();
            if norm == 0.0 {
                DVector::zeros(beta.len())
            } else {
                beta * (direction * delta / norm)
            }
        }
    };
    let attained_value = (y - (x + &delta_x).dot(beta)).abs();
    Ok(AttackVector {
        delta_x,
        attained_value,
    })
}

/// Worst-case residual norm over the sample-wise uncertainty set
/// `{Delta : ||Delta_i||_p <= delta for every row}`.
pub fn robust_risk_samplewise(
    beta: &DVector<f64>,
    data: &Dataset,
    budget: &AttackBudget,
) -> Result<f64> {
    Ok(dual_terms(beta, data, budget)?.norm())
}

/// Worst-case residual norm over the feature-wise uncertainty set
/// `{Delta : ||Delta_j||_2 <= delta for every column}`, which equals the
/// square-root lasso objective `||y - X beta||_2 + delta ||beta||_1`.
pub fn robust_risk_featurewise(beta: &DVector<f64>, data: &Dataset, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "uncertainty radius must be nonnegative, got {delta}"
        )));
    }
    let r = data.residuals(beta)?;
    Ok(r.norm() + delta * beta.lp_norm(1))
}

/// Canonical subgradient norm selection: `beta/||beta||_2` or `sign(beta)`,
/// zero where the norm is not differentiable.
fn canonical_norm_subgradient(beta: &DVector<f64>, p: NormOrder) -> DVector<f64> {
    match p {
        NormOrder::L2 => {
            let norm = beta.norm();
            if norm == 0.0 {
                DVector::zeros(beta.len())
            } else {
                beta / norm
            }
        }
        NormOrder::LInf => beta.map(sign_or_zero),
    }
}

/// One element of the subdifferential of [`adv_risk`], selecting zero for
/// every `sign(0)`.
pub fn adv_risk_subgradient(
    beta: &DVector<f64>,
    data: &Dataset,
    budget: &AttackBudget,
) -> Result<DVector<f64>> {
    let r = data.residuals(beta)?;
    let delta = budget.delta();
    let penalty = delta * budget.p().dual_norm(beta);
    let g = canonical_norm_subgradient(beta, budget.p());
    let mut out = DVector::zeros(data.m());
    let mut total = 0.0;
    for (i, &ri) in r.iter().enumerate() {
        let fi = ri.abs() + penalty;
        let s = sign_or_zero(ri);
        if s != 0.0 {
            out.axpy(-fi * s, &data.x().row(i).transpose(), 1.0);
        }
        total += fi;
    }
    out.axpy(delta * total, &g, 1.0);
    Ok(out * (2.0 / data.n() as f64))
}

/// Relative distance from zero to the subdifferential of [`adv_risk`] at
/// `beta`.
///
/// Samples with `|r_i| <= active_tol (1 + ||y||_inf)` are treated as
/// interpolated and coefficients with `|beta_j| <= active_tol (1 +
/// ||beta||_inf)` as zero, so the sign selections there range over
/// `[-1, 1]`. The distance is normalized by
/// `(2/n) sum_i f_i (||x_i||_2 + delta c_q)` with `c_1 = sqrt(m)`,
/// `c_2 = 1`.
pub fn adv_stationarity(
    beta: &DVector<f64>,
    data: &Dataset,
    budget: &AttackBudget,
    active_tol: f64,
) -> Result<f64> {
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let r = data.residuals(beta)?;
    let delta = budget.delta();
    let p = budget.p();
    let tol_r = active_tol * (1.0 + data.y().amax());
    let tol_b = active_tol * (1.0 + beta.amax());
    let factor = 2.0 / n as f64;

    // zero out coefficients judged inactive so the norm terms are consistent
    let beta_c = match p {
        NormOrder::LInf => beta.map(|b| if b.abs() <= tol_b { 0.0 } else { b }),
        NormOrder::L2 => {
            if beta.norm() <= tol_b {
                DVector::zeros(m)
            } else {
                beta.clone()
            }
        }
    };
    let penalty = delta * p.dual_norm(&beta_c);
    let f: Vec<f64> = r.iter().map(|ri| ri.abs() + penalty).collect();
    let total: f64 = f.iter().sum();
    let cq = match p {
        NormOrder::LInf => (m as f64).sqrt(),
        NormOrder::L2 => 1.0,
    };
    let normalizer: f64 = (0..n)
        .map(|i| factor * f[i] * (x.row(i).norm() + delta * cq))
        .sum();
    if normalizer == 0.0 {
        return Ok(0.0);
    }

    let mut v0 = DVector::zeros(m);
    let mut free_samples = Vec::new();
    for i in 0..n {
        if r[i].abs() <= tol_r {
            free_samples.push(i);
        } else {
            v0.axpy(-factor * f[i] * r[i].signum(), &x.row(i).transpose(), 1.0);
        }
    }
    let d = factor * delta * total;
    let mut box_cols: Vec<DVector<f64>> = free_samples
        .iter()
        .filter(|&&i| f[i] > 0.0)
        .map(|&i| x.row(i).transpose() * (-factor * f[i]))
        .collect();
    let mut ball = None;
    match p {
        NormOrder::LInf => {
            for j in 0..m {
                if beta_c[j] != 0.0 {
                    v0[j] += d * beta_c[j].signum();
                } else if d > 0.0 {
                    let mut e = DVector::zeros(m);
                    e[j] = d;
                    box_cols.push(e);
                }
            }
        }
        NormOrder::L2 => {
            let norm = beta_c.norm();
            if norm > 0.0 {
                v0.axpy(d / norm, &beta_c, 1.0);
            } else if d > 0.0 {
                ball = Some(DMatrix::identity(m, m) * d);
            }
        }
    }
    let boxed = if box_cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&box_cols)
    };
    Ok(min_norm_element(&v0, &boxed, ball.as_ref()) / normalizer)
}

/// Outcome of [`check_interpolation_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Both conditions hold: every sample interpolates and `delta` is within
    /// the threshold bound.
    pub holds: bool,
    pub per_sample_interpolation: Vec<bool>,
    /// `gamma_min(X)` for l_inf attacks, `gamma_min(X Q')` for l2 attacks.
    pub delta_bound: f64,
    /// `INTERPOLATION_TOL - |y_i - x_i'beta|` per sample; negative fails.
    pub interpolation_margins: Vec<f64>,
    /// `delta_bound - delta`; negative fails.
    pub delta_margin: f64,
    /// Relative distance from zero to the subdifferential at `beta`
    /// (see [`adv_stationarity`]); independent of the threshold bound.
    pub stationarity_residual: f64,
}

/// Checks the sufficient condition for `beta` to minimize the adversarial
/// risk: `beta` interpolates the data and `delta` does not exceed the
/// threshold bound for the attack norm.
pub fn check_interpolation_certificate(
    beta: &DVector<f64>,
    data: &Dataset,
    budget: &AttackBudget,
) -> Result<CertificateReport> {
    let r = data.residuals(beta)?;
    linalg::require_full_row_rank(data.x())?;
    let report = thresholds::interpolation_thresholds(data)?;
    let delta_bound = match budget.p() {
        NormOrder::LInf => report.gamma_min_x,
        NormOrder::L2 => report.gamma_min_xqt,
    };
    let interpolation_margins: Vec<f64> =
        r.iter().map(|ri| INTERPOLATION_TOL - ri.abs()).collect();
    let per_sample_interpolation: Vec<bool> =
        interpolation_margins.iter().map(|&m| m >= 0.0).collect();
    let delta_margin = delta_bound - budget.delta();
    let holds = per_sample_interpolation.iter().all(|&b| b) && delta_margin >= 0.0;
    let stationarity_residual = adv_stationarity(beta, data, budget, 1e-9)?;
    Ok(CertificateReport {
        holds,
        per_sample_interpolation,
        delta_bound,
        interpolation_margins,
        delta_margin,
        stationarity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(delta: f64, p: NormOrder) -> AttackBudget {
        AttackBudget::new(delta, p).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn risk_at_zero_is_mean_square_response() {
        let d = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 2.0]).unwrap();
        for delta in [0.0, 0.3, 10.0] {
            for p in [NormOrder::L2, NormOrder::LInf] {
                let r = adv_risk(&v(&[0.0, 0.0]), &d, &budget(delta, p)).unwrap();
                assert_eq!(r, 2.5);
            }
        }
    }

    #[test]
    fn risk_single_sample_linf() {
        let d = Dataset::from_rows(&[vec![1.0, 0.0]], &[1.0]).unwrap();
        let r = adv_risk(&v(&[1.0, 0.0]), &d, &budget(0.5, NormOrder::LInf)).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn risk_reduces_to_mse_without_attack() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]], &[1.0, 0.0, 2.0])
            .unwrap();
        let beta = v(&[0.2, -0.7]);
        let mse = d.residuals(&beta).unwrap().norm_squared() / 3.0;
        let r = adv_risk(&beta, &d, &budget(0.0, NormOrder::L2)).unwrap();
        assert!((r - mse).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0]], &[1.0]).unwrap();
        assert!(adv_risk(&v(&[1.0]), &d, &budget(0.1, NormOrder::L2)).is_err());
        assert!(worst_case_attack(&v(&[1.0]), &v(&[1.0, 2.0]), 0.0, &budget(0.1, NormOrder::L2)).is_err());
    }

    #[test]
    fn attack_linf_example() {
        // residual y - x'beta = 1 with x = 0, y = 1
        let beta = v(&[1.0, -2.0, 0.0]);
        let a = worst_case_attack(&beta, &v(&[0.0, 0.0, 0.0]), 1.0, &budget(0.5, NormOrder::LInf)).unwrap();
        assert_eq!(a.delta_x, v(&[-0.5, 0.5, 0.0]));
        assert!((a.attained_value - 2.5).abs() < 1e-15);
    }

    #[test]
    fn attack_l2_example() {
        let beta = v(&[3.0, 4.0]);
        // residual -1: y = 0, x'beta = 1
        let x = v(&[1.0 / 3.0, 0.0]);
        let a = worst_case_attack(&beta, &x, 0.0, &budget(1.0, NormOrder::L2)).unwrap();
        assert!((&a.delta_x - v(&[0.6, 0.8])).amax() < 1e-15);
        assert!((a.attained_value - 6.0).abs() < 1e-14);
    }

    #[test]
    fn attack_on_zero_coefficients() {
        let beta = v(&[0.0, 0.0]);
        for p in [NormOrder::L2, NormOrder::LInf] {
            let a = worst_case_attack(&beta, &v(&[2.0, 1.0]), -3.0, &budget(0.7, p)).unwrap();
            assert_eq!(a.delta_x, v(&[0.0, 0.0]));
            assert_eq!(a.attained_value, 3.0);
        }
    }

    #[test]
    fn attack_when_residual_is_zero() {
        let beta = v(&[1.0, 1.0]);
        let a = worst_case_attack(&beta, &v(&[1.0, 1.0]), 2.0, &budget(0.25, NormOrder::LInf)).unwrap();
        assert!((a.attained_value - 0.5).abs() < 1e-15);
        assert!(a.delta_x.amax() <= 0.25);
    }

    #[test]
    fn robust_risks_at_zero() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[3.0, 4.0]).unwrap();
        let zero = v(&[0.0, 0.0]);
        assert_eq!(robust_risk_samplewise(&zero, &d, &budget(0.4, NormOrder::L2)).unwrap(), 5.0);
        assert_eq!(robust_risk_featurewise(&zero, &d, 0.4).unwrap(), 5.0);
        let beta = v(&[1.0, -1.0]);
        let res = d.residuals(&beta).unwrap().norm();
        assert_eq!(robust_risk_featurewise(&beta, &d, 0.0).unwrap(), res);
    }

    #[test]
    fn samplewise_identity() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0], vec![0.1, 0.2]], &[3.0, 4.0, -1.0])
            .unwrap();
        let beta = v(&[0.3, -0.2]);
        for p in [NormOrder::L2, NormOrder::LInf] {
            let b = budget(0.37, p);
            let rr = robust_risk_samplewise(&beta, &d, &b).unwrap();
            let adv = adv_risk(&beta, &d, &b).unwrap();
            assert!((rr * rr - 3.0 * adv).abs() < 1e-14);
        }
    }

    #[test]
    fn subgradient_without_attack_is_mse_gradient() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0], vec![0.1, 0.2]], &[3.0, 4.0, -1.0])
            .unwrap();
        let beta = v(&[0.3, -0.2]);
        let g = adv_risk_subgradient(&beta, &d, &budget(0.0, NormOrder::LInf)).unwrap();
        let r = d.residuals(&beta).unwrap();
        let expected = d.x().transpose() * r * (-2.0 / 3.0);
        assert!((g - expected).amax() < 1e-14);
    }

    #[test]
    fn subgradient_at_global_minimum_origin() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0]], &[0.0, 0.0]).unwrap();
        for p in [NormOrder::L2, NormOrder::LInf] {
            let g = adv_risk_subgradient(&v(&[0.0, 0.0]), &d, &budget(0.5, p)).unwrap();
            assert_eq!(g, v(&[0.0, 0.0]));
        }
    }

    #[test]
    fn stationarity_of_single_sample_closed_form() {
        // n = 1, x = (3, 4), y = 5: beta = (0.6, 0.8) is optimal for delta < 5.
        let d = Dataset::from_rows(&[vec![3.0, 4.0]], &[5.0]).unwrap();
        let b = budget(1.0, NormOrder::L2);
        let res = adv_stationarity(&v(&[0.6, 0.8]), &d, &b, 1e-9).unwrap();
        assert!(res < 1e-12, "{res}");
        let res = adv_stationarity(&v(&[0.5, 0.8]), &d, &b, 1e-9).unwrap();
        assert!(res > 1e-3, "{res}");
        // beyond the threshold the origin is optimal instead
        let b = budget(6.0, NormOrder::L2);
        assert!(adv_stationarity(&v(&[0.0, 0.0]), &d, &b, 1e-9).unwrap() < 1e-12);
        assert!(adv_stationarity(&v(&[0.6, 0.8]), &d, &b, 1e-9).unwrap() > 1e-3);
    }

    #[test]
    fn certificate_rejects_non_interpolating_beta() {
        let d = Dataset::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.3, 1.0, -0.4]], &[1.0, 1.0]).unwrap();
        let b = budget(1e-6, NormOrder::LInf);
        let rep = check_interpolation_certificate(&v(&[0.0, 0.0, 0.0]), &d, &b).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.per_sample_interpolation, vec![false, false]);
    }

    #[test]
    fn certificate_requires_full_row_rank() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).unwrap();
        let err = check_interpolation_certificate(&v(&[1.0, 0.0]), &d, &budget(0.1, NormOrder::LInf));
        assert!(matches!(err, Err(Error::RankDeficient { .. })));
    }
}
