//! Estimators with direct linear-algebra solutions: ridge, least squares and
//! the minimum-l2-norm interpolator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Dataset, FitResult, Method};

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn mse(data: &Dataset, beta: &DVector<f64>) -> f64 {
    (data.y() - data.x() * beta).norm_squared() / data.n() as f64
}

/// Relative residual of `(X'X + n delta I) beta = X'y`.
pub fn ridge_system_residual(data: &Dataset, delta: f64, beta: &DVector<f64>) -> f64 {
    let x = data.x();
    let n = data.n() as f64;
    let xty = x.transpose() * data.y();
    let lhs = x.transpose() * (x * beta) + beta * (n * delta);
    let scale = xty.norm().max((x.transpose() * (x * beta)).norm());
    relative((lhs - &xty).norm(), scale)
}

/// Ridge regression: minimizes `(1/n)||y - X beta||^2 + delta ||beta||_2^2`,
/// i.e. solves `(X'X + n delta I) beta = X'y`.
pub fn fit_ridge(data: &Dataset, delta: f64) -> Result<FitResult> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge penalty must be finite and nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 {
        let mut fit = fit_ols(data)?;
        fit.method = Method::Ridge;
        return Ok(fit);
    }
    let x = data.x();
    let y = data.y();
    let (n, m) = (data.n(), data.m());
    let shift = n as f64 * delta;
    let solve_primal = || -> Option<DVector<f64>> {
        let mut a = x.transpose() * x;
        for i in 0..m {
            a[(i, i)] += shift;
        }
        let chol = a.cholesky()?;
        let rhs = x.transpose() * y;
        let mut beta = chol.solve(&rhs);
        // one step of iterative refinement
        let res = &rhs - (x.transpose() * (x * &beta) + &beta * shift);
        beta += chol.solve(&res);
        Some(beta)
    };
    let solve_dual = || -> Option<DVector<f64>> {
        let mut a = x * x.transpose();
        for i in 0..n {
            a[(i, i)] += shift;
        }
        let chol = a.cholesky()?;
        let mut coef = chol.solve(y);
        let res = y - (x * (x.transpose() * &coef) + &coef * shift);
        coef += chol.solve(&res);
        Some(x.transpose() * coef)
    };
    let beta = if m <= n { solve_primal() } else { solve_dual() }
        .ok_or_else(|| Error::Singular("ridge system is not positive definite".into()))?;
    let residual = ridge_system_residual(data, delta, &beta);
    let objective = mse(data, &beta) + delta * beta.norm_squared();
    Ok(FitResult {
        beta: beta.as_slice().to_vec(),
        objective,
        iterations: 1,
        converged: true,
        optimality_residual: residual,
        method: Method::Ridge,
    })
}

/// Ordinary least squares. Requires full column rank.
pub fn fit_ols(data: &Dataset) -> Result<FitResult> {
    let x = data.x();
    let rank = linalg::numerical_rank(x);
    if rank < data.m() {
        return Err(Error::Singular(format!(
            "least squares needs full column rank; rank is {rank} for {} features",
            data.m()
        )));
    }
    let mut beta = linalg::pseudo_solve(x, data.y())?;
    let correction = linalg::pseudo_solve(x, &(data.y() - x * &beta))?;
    beta += correction;
    let grad = x.transpose() * (data.y() - x * &beta);
    let scale = (x.transpose() * data.y()).norm();
    Ok(FitResult {
        optimality_residual: relative(grad.norm(), scale),
        objective: mse(data, &beta),
        beta: beta.as_slice().to_vec(),
        iterations: 1,
        converged: true,
        method: Method::Ols,
    })
}

/// Minimum-l2-norm solution of `X beta = y` for full-row-rank `X`,
/// `beta = Q' (X Q')^{-1} y` with `Q` an orthonormal basis of the row space.
pub fn min_l2_interpolator(data: &Dataset) -> Result<FitResult> {
    let x = data.x();
    let y = data.y();
    let q = linalg::orthonormal_row_basis(x)?;
    let r: DMatrix<f64> = x * q.transpose();
    let lu = r.clone().lu();
    let mut alpha = lu
        .solve(y)
        .ok_or_else(|| Error::Singular("projected design is singular".into()))?;
    let res = y - &r * &alpha;
    if let Some(c) = lu.solve(&res) {
        alpha += c;
    }
    let beta = q.transpose() * alpha;
    let fit_res = relative((x * &beta - y).norm(), y.norm());
    // component outside the row space
    let outside = relative((&beta - q.transpose() * (&q * &beta)).norm(), beta.norm());
    Ok(FitResult {
        objective: beta.norm(),
        beta: beta.as_slice().to_vec(),
        iterations: 1,
        converged: true,
        optimality_residual: fit_res.max(outside),
        method: Method::MinL2Interp,
    })
}
