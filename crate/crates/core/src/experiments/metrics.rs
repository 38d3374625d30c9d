//! Fit quality summaries.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

/// Coefficients with `|beta_j|` above this count as nonzero.
pub const NONZERO_TOL: f64 = 1e-8;

pub fn mse(beta: &DVector<f64>, data: &Dataset) -> Result<f64> {
    Ok(data.residuals(beta)?.norm_squared() / data.n() as f64)
}

pub fn nonzero_count(beta: &DVector<f64>) -> usize {
    beta.iter().filter(|b| b.abs() > NONZERO_TOL).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_mse: f64,
    pub test_mse: f64,
    /// Test MSE over the (mean-centered) variance of the test responses.
    pub nmse: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub nonzero_count: usize,
}

pub fn metrics(beta: &DVector<f64>, train: &Dataset, test: &Dataset) -> Result<Metrics> {
    let train_mse = mse(beta, train)?;
    let test_mse = mse(beta, test)?;
    let y = test.y();
    let variance = y.map(|v| v - y.mean()).norm_squared() / y.len() as f64;
    if variance == 0.0 {
        return Err(Error::InvalidParameter(
            "test responses are constant; NMSE is undefined".into(),
        ));
    }
    Ok(Metrics {
        train_mse,
        test_mse,
        nmse: test_mse / variance,
        l1_norm: beta.lp_norm(1),
        l2_norm: beta.norm(),
        nonzero_count: nonzero_count(beta),
    })
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolator_has_zero_train_error() {
        let d = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, -1.0]).unwrap();
        let t = Dataset::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.0]], &[0.0, 1.0]).unwrap();
        let m = metrics(&DVector::from_vec(vec![2.0, -1.0]), &d, &t).unwrap();
        assert_eq!(m.train_mse, 0.0);
        assert_eq!(m.nonzero_count, 2);
        // test residuals (-1, -3): mse 5, var 0.25
        assert!((m.test_mse - 5.0).abs() < 1e-15 && (m.nmse - 20.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_nmse() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], &[1.0, 2.0, 6.0]).unwrap();
        let m = metrics(&DVector::zeros(1), &d, &d).unwrap();
        let mean_sq = (1.0 + 4.0 + 36.0) / 3.0;
        let var = mean_sq - 9.0;
        assert!((m.nmse - mean_sq / var).abs() < 1e-12);
    }

    #[test]
    fn constant_test_response() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0]], &[1.0, 1.0]).unwrap();
        assert!(metrics(&DVector::zeros(1), &d, &d).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
