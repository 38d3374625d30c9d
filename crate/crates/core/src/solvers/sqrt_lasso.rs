//! Square-root lasso, `||y - X beta||_2 + delta ||beta||_1`, as a
//! second-order cone program followed by a face polish.

use nalgebra::{DMatrix, DVector};

use super::conic::{self, Cone, ConicProgram, IpmSettings, SparseRow};
use super::face::{minimize_on_face, SmoothFace};
use super::subgradient::min_norm_element;
use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::robust_risk_featurewise;
use crate::types::{Dataset, FitResult, Method, SolverConfig};

const ACTIVE_TOLS: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];
const CERTIFY_TOL: f64 = 1e-9;

/// Smallest `delta` with an all-zero solution, `||X'y||_inf / ||y||_2`.
pub fn sqrt_lasso_zero_threshold(data: &Dataset) -> f64 {
    let ny = data.y().norm();
    if ny == 0.0 {
        return 0.0;
    }
    (data.x().transpose() * data.y()).amax() / ny
}

/// Relative distance from zero to the subdifferential of the square-root
/// lasso objective at `beta`. When the residual vanishes (within
/// `active_tol`), its subdifferential is the image of the unit ball under
/// `-X'`.
pub fn sqrt_lasso_stationarity(
    beta: &DVector<f64>,
    data: &Dataset,
    delta: f64,
    active_tol: f64,
) -> Result<f64> {
    let x = data.x();
    let m = data.m();
    let r = data.residuals(beta)?;
    let tol_r = active_tol * (1.0 + data.y().norm());
    let tol_b = active_tol * (1.0 + beta.amax());
    let normalizer = x.norm() + delta * (m as f64).sqrt();
    if normalizer == 0.0 {
        return Ok(0.0);
    }
    let mut v0 = DVector::zeros(m);
    let rn = r.norm();
    let ball = if rn > tol_r {
        v0 -= x.transpose() * (&r / rn);
        None
    } else {
        Some(-x.transpose())
    };
    let mut box_cols = Vec::new();
    for j in 0..m {
        if beta[j].abs() > tol_b {
            v0[j] += delta * beta[j].signum();
        } else if delta > 0.0 {
            let mut e = DVector::zeros(m);
            e[j] = delta;
            box_cols.push(e);
        }
    }
    let boxed = if box_cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&box_cols)
    };
    Ok(min_norm_element(&v0, &boxed, ball.as_ref()) / normalizer)
}

pub fn fit_sqrt_lasso(data: &Dataset, delta: f64, config: &SolverConfig) -> Result<FitResult> {
    fit_sqrt_lasso_warm(data, delta, config, None)
}

pub fn fit_sqrt_lasso_warm(
    data: &Dataset,
    delta: f64,
    config: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<FitResult> {
    config.validate()?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "square-root lasso penalty must be finite and nonnegative, got {delta}"
        )));
    }
    let m = data.m();
    let tol = config.tolerance;
    let finish = |beta: DVector<f64>, iterations: usize| -> Result<FitResult> {
        let residual = sqrt_lasso_stationarity(&beta, data, delta, CERTIFY_TOL)?;
        Ok(FitResult {
            objective: robust_risk_featurewise(&beta, data, delta)?,
            beta: beta.as_slice().to_vec(),
            iterations,
            converged: residual <= tol,
            optimality_residual: residual,
            method: Method::SqrtLasso,
        })
    };

    if delta >= sqrt_lasso_zero_threshold(data) {
        return finish(DVector::zeros(m), 0);
    }
    if delta == 0.0 {
        // any least-squares solution; take the minimum-norm one
        let beta = linalg::pseudo_solve(data.x(), data.y())?;
        let beta = &beta + linalg::pseudo_solve(data.x(), &(data.y() - data.x() * &beta))?;
        return finish(beta, 1);
    }
    if let Some(w) = warm {
        data.check_beta(w)?;
        if let Some(beta) = polish(data, delta, w, 1e-10) {
            if sqrt_lasso_stationarity(&beta, data, delta, CERTIFY_TOL)? <= tol {
                return finish(beta, 1);
            }
        }
    }

    let (beta_ipm, iterations) = solve_ipm(data, delta, config)?;
    let mut best = beta_ipm.clone();
    let mut best_res = sqrt_lasso_stationarity(&best, data, delta, CERTIFY_TOL)?;
    let ipm_obj = robust_risk_featurewise(&best, data, delta)?;
    // prefer a certified face solution even when the raw iterate passes
    for &active in &ACTIVE_TOLS {
        let Some(cand) = polish(data, delta, &beta_ipm, active) else {
            continue;
        };
        let res = sqrt_lasso_stationarity(&cand, data, delta, CERTIFY_TOL)?;
        let obj = robust_risk_featurewise(&cand, data, delta)?;
        if obj > ipm_obj * (1.0 + 1e-9) {
            continue;
        }
        if res <= tol {
            best = cand;
            break;
        }
        if res < best_res {
            best = cand;
            best_res = res;
        }
    }
    finish(best, iterations)
}

fn solve_ipm(data: &Dataset, delta: f64, config: &SolverConfig) -> Result<(DVector<f64>, usize)> {
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let scale = data.y().amax();
    let y = data.y() / scale;
    // beta | w | s0
    let s0 = 2 * m;
    let nvar = s0 + 1;
    let mut c = DVector::zeros(nvar);
    for j in 0..m {
        c[m + j] = delta;
    }
    c[s0] = 1.0;
    let mut g: Vec<SparseRow> = Vec::new();
    let mut h = Vec::new();
    for sign in [1.0, -1.0] {
        for j in 0..m {
            g.push(vec![(j, sign), (m + j, -1.0)]);
            h.push(0.0);
        }
    }
    g.push(vec![(s0, -1.0)]);
    h.push(0.0);
    for i in 0..n {
        g.push((0..m).filter(|&j| x[(i, j)] != 0.0).map(|j| (j, x[(i, j)])).collect());
        h.push(y[i]);
    }
    let prog = ConicProgram {
        n: nvar,
        p: None,
        c,
        g,
        h: DVector::from_vec(h),
        cones: vec![Cone::NonNeg(2 * m), Cone::Soc(n + 1)],
        a: None,
        b: DVector::zeros(0),
    };
    let settings = IpmSettings {
        max_iterations: config.max_iterations.min(200),
        feas_tol: 1e-11,
        abs_tol: 1e-14,
        rel_tol: 1e-11,
    };
    let sol = conic::solve(&prog, &settings)?;
    let beta = sol.x.rows(0, m).into_owned() * scale;
    if !beta.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("interior-point iterate is not finite".into()));
    }
    Ok((beta, sol.iterations))
}

fn polish(
    data: &Dataset,
    delta: f64,
    candidate: &DVector<f64>,
    active_tol: f64,
) -> Option<DVector<f64>> {
    let x = data.x();
    let y = data.y();
    let m = data.m();
    let tol_b = active_tol * candidate.amax().max(1e-300);
    let support: Vec<usize> = (0..m).filter(|&j| candidate[j].abs() > tol_b).collect();
    if support.is_empty() {
        return Some(DVector::zeros(m));
    }
    let xs = DMatrix::from_fn(data.n(), support.len(), |i, a| x[(i, support[a])]);
    let start = DVector::from_iterator(support.len(), support.iter().map(|&j| candidate[j]));
    let r = y - x * candidate;
    let sol = if r.norm() <= active_tol * (1.0 + y.norm()) {
        // interpolating face: stay on X_S b = y nearest the candidate
        let fix = linalg::pseudo_solve(&xs, &(y - &xs * &start)).ok()?;
        let b = start + fix;
        if (&xs * &b - y).amax() > 1e-9 * (1.0 + y.amax()) {
            return None;
        }
        b
    } else {
        let sigma = DVector::from_iterator(support.len(), support.iter().map(|&j| candidate[j].signum()));
        let face = Face { xs: &xs, y, sigma, delta };
        minimize_on_face(&face, &DMatrix::zeros(0, support.len()), &DVector::zeros(0), &start, 50)?
    };
    let mut beta = DVector::zeros(m);
    for (a, &j) in support.iter().enumerate() {
        beta[j] = sol[a];
    }
    beta.iter().all(|v| v.is_finite()).then_some(beta)
}

/// `||y - X_S b|| + delta sigma'b` with fixed signs on the support.
struct Face<'a> {
    xs: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    sigma: DVector<f64>,
    delta: f64,
}

impl SmoothFace for Face<'_> {
    fn dim(&self) -> usize {
        self.xs.ncols()
    }

    fn value(&self, b: &DVector<f64>) -> f64 {
        (self.y - self.xs * b).norm() + self.delta * self.sigma.dot(b)
    }

    fn gradient(&self, b: &DVector<f64>) -> DVector<f64> {
        let r = self.y - self.xs * b;
        -(self.xs.transpose() * &r) / r.norm() + &self.sigma * self.delta
    }

    fn hessian(&self, b: &DVector<f64>) -> DMatrix<f64> {
        let r = self.y - self.xs * b;
        let rn = r.norm();
        let u = &r / rn;
        let xtu = self.xs.transpose() * &u;
        (self.xs.transpose() * self.xs - &xtu * xtu.transpose()) / rn
    }
}
