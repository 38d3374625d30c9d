//! Lasso by cyclic coordinate descent, for
//! `(1/n)||y - X beta||^2 + delta ||beta||_1`.

use nalgebra::{DMatrix, DVector};

use super::conic::{self, Cone, ConicProgram, IpmSettings, SparseRow};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Dataset, FitResult, Method, SolverConfig};

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest penalty with an all-zero solution, `(2/n)||X'y||_inf`.
pub fn lasso_delta_max(data: &Dataset) -> f64 {
    2.0 / data.n() as f64 * (data.x().transpose() * data.y()).amax()
}

/// Largest violation of the lasso optimality conditions, relative to
/// `max(delta, delta_max)`:
/// `|g_j| <= delta` where `beta_j = 0`, `g_j = -delta sign(beta_j)` elsewhere,
/// with `g = -(2/n) X'(y - X beta)`.
pub fn lasso_kkt_residual(data: &Dataset, delta: f64, beta: &DVector<f64>) -> f64 {
    let n = data.n() as f64;
    let grad = data.x().transpose() * (data.y() - data.x() * beta) * (-2.0 / n);
    let worst = grad
        .iter()
        .zip(beta.iter())
        .map(|(&g, &b)| {
            if b == 0.0 {
                (g.abs() - delta).max(0.0)
            } else {
                (g + delta * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max);
    let scale = delta.max(lasso_delta_max(data));
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

pub fn fit_lasso(data: &Dataset, delta: f64, config: &SolverConfig) -> Result<FitResult> {
    fit_lasso_warm(data, delta, config, None)
}

/// Coordinate descent from `warm` (or zero). Convergence is declared only
/// when [`lasso_kkt_residual`] is below the configured tolerance.
pub fn fit_lasso_warm(
    data: &Dataset,
    delta: f64,
    config: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<FitResult> {
    config.validate()?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lasso penalty must be finite and nonnegative, got {delta}"
        )));
    }
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let mut beta = match warm {
        Some(w) => {
            data.check_beta(w)?;
            w.clone()
        }
        None => DVector::zeros(m),
    };
    let col_sq: Vec<f64> = (0..m).map(|j| x.column(j).norm_squared()).collect();
    let threshold = n as f64 * delta / 2.0;
    let mut resid = data.y() - x * &beta;
    let y_scale = data.y().amax().max(1e-300);

    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < config.max_iterations {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if col_sq[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let rho = col.dot(&resid) + col_sq[j] * old;
            let new = soft_threshold(rho, threshold) / col_sq[j];
            if new != old {
                resid.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs() * col_sq[j].sqrt());
            }
        }
        // residual drifts under many rank-one updates
        if sweeps % 64 == 0 {
            resid = data.y() - x * &beta;
        }
        if max_change <= 1e-3 * config.tolerance * y_scale || sweeps % 16 == 0 {
            residual = lasso_kkt_residual(data, delta, &beta);
            if residual <= config.tolerance {
                break;
            }
        }
    }
    if !residual.is_finite() || sweeps >= config.max_iterations {
        residual = lasso_kkt_residual(data, delta, &beta);
    }
    if residual > config.tolerance {
        // coordinate descent stalls at tiny penalties on wide designs
        if let Some(candidate) = solve_ipm(data, delta, config) {
            let res = lasso_kkt_residual(data, delta, &candidate);
            if res < residual {
                beta = candidate;
                residual = res;
            }
        }
    }
    let objective = (data.y() - x * &beta).norm_squared() / n as f64 + delta * beta.lp_norm(1);
    Ok(FitResult {
        beta: beta.as_slice().to_vec(),
        objective,
        iterations: sweeps,
        converged: residual <= config.tolerance,
        optimality_residual: residual,
        method: Method::Lasso,
    })
}

/// Interior-point solve of the lasso as a quadratic program, snapped to
/// the stationary point of its support.
fn solve_ipm(data: &Dataset, delta: f64, config: &SolverConfig) -> Option<DVector<f64>> {
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let scale = data.y().amax();
    if scale == 0.0 {
        return Some(DVector::zeros(m));
    }
    let y = data.y() / scale;
    let c2 = 2.0 / n as f64;
    let mut p = DMatrix::zeros(2 * m, 2 * m);
    p.view_mut((0, 0), (m, m)).copy_from(&(x.transpose() * x * c2));
    let mut c = DVector::zeros(2 * m);
    c.rows_mut(0, m).copy_from(&(x.transpose() * &y * -c2));
    // dividing y by `scale` divides the penalty by it as well
    for j in 0..m {
        c[m + j] = delta / scale;
    }
    let mut g: Vec<SparseRow> = Vec::new();
    for sign in [1.0, -1.0] {
        for j in 0..m {
            g.push(vec![(j, sign), (m + j, -1.0)]);
        }
    }
    let prog = ConicProgram {
        n: 2 * m,
        p: Some(p),
        c,
        g,
        h: DVector::zeros(2 * m),
        cones: vec![Cone::NonNeg(2 * m)],
        a: None,
        b: DVector::zeros(0),
    };
    let settings = IpmSettings {
        max_iterations: config.max_iterations.min(200),
        feas_tol: 1e-12,
        abs_tol: 1e-14,
        rel_tol: 1e-12,
    };
    let sol = conic::solve(&prog, &settings).ok()?;
    let raw = sol.x.rows(0, m).into_owned() * scale;
    let mut best = raw.clone();
    let mut best_res = lasso_kkt_residual(data, delta, &raw);
    let top = raw.amax();
    for active in [1e-10, 1e-8, 1e-6] {
        let support: Vec<usize> = (0..m).filter(|&j| raw[j].abs() > active * top).collect();
        if support.is_empty() {
            continue;
        }
        // X_S'(y - X_S b) = (n delta / 2) sign(b)
        let xs = DMatrix::from_fn(n, support.len(), |i, a| x[(i, support[a])]);
        let rhs = xs.transpose() * data.y()
            - DVector::from_iterator(support.len(), support.iter().map(|&j| raw[j].signum()))
                * (n as f64 * delta / 2.0);
        let Ok(bs) = linalg::pseudo_solve(&(xs.transpose() * &xs), &rhs) else {
            continue;
        };
        let mut cand = DVector::zeros(m);
        for (a, &j) in support.iter().enumerate() {
            cand[j] = bs[a];
        }
        let res = lasso_kkt_residual(data, delta, &cand);
        if res < best_res {
            best = cand;
            best_res = res;
        }
    }
    best.iter().all(|v| v.is_finite()).then_some(best)
}
