//! Adversarial training: minimizes
//! `(1/n) sum_i (|y_i - x_i'beta| + delta ||beta||_q)^2`.
//!
//! The objective is written as a conic quadratic program with epigraph
//! variables `u_i >= |r_i|` and `t >= ||beta||_q` and handed to the
//! interior-point engine. The result is then polished on the face picked out
//! by its active sets (zero coefficients, interpolated samples, residual
//! signs), where the objective is smooth, and certified with the exact
//! subdifferential.

use nalgebra::{DMatrix, DVector};

use super::conic::{self, Cone, ConicProgram, IpmSettings, SparseRow};
use super::face::{minimize_on_face, SmoothFace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::{adv_risk, adv_stationarity};
use crate::types::{AttackBudget, Dataset, FitResult, Method, NormOrder, SolverConfig};

/// Active-set tolerances tried when polishing, loosest last.
const ACTIVE_TOLS: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];
/// Active-set tolerance of the reported stationarity residual.
const CERTIFY_TOL: f64 = 1e-9;

/// Smallest radius at which `beta = 0` minimizes the adversarial risk:
/// `||X'y||_p / ||y||_1` (zero-subgradient condition at the origin).
pub fn adversarial_zero_threshold(data: &Dataset, p: NormOrder) -> f64 {
    let l1 = data.y().lp_norm(1);
    if l1 == 0.0 {
        return 0.0;
    }
    p.norm(&(data.x().transpose() * data.y())) / l1
}

pub fn fit_adversarial(
    data: &Dataset,
    budget: &AttackBudget,
    config: &SolverConfig,
) -> Result<FitResult> {
    fit_adversarial_warm(data, budget, config, None)
}

/// Like [`fit_adversarial`], first trying the face of `warm` at the new
/// radius. Along a regularization path the active sets change rarely, so
/// most grid points are solved by one face solve.
pub fn fit_adversarial_warm(
    data: &Dataset,
    budget: &AttackBudget,
    config: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<FitResult> {
    config.validate()?;
    let m = data.m();
    let tol = config.tolerance;
    let finish = |beta: DVector<f64>, iterations: usize| -> Result<FitResult> {
        let residual = adv_stationarity(&beta, data, budget, CERTIFY_TOL)?;
        Ok(FitResult {
            objective: adv_risk(&beta, data, budget)?,
            beta: beta.as_slice().to_vec(),
            iterations,
            converged: residual <= tol,
            optimality_residual: residual,
            method: Method::Adversarial,
        })
    };

    if budget.delta() >= adversarial_zero_threshold(data, budget.p()) {
        return finish(DVector::zeros(m), 0);
    }

    if let Some(w) = warm {
        data.check_beta(w)?;
        if let Some(beta) = polish(data, budget, w, 1e-10) {
            let residual = adv_stationarity(&beta, data, budget, CERTIFY_TOL)?;
            if residual <= tol {
                return finish(beta, 1);
            }
        }
    }

    let (beta_ipm, iterations) = solve_ipm(data, budget, config)?;
    let mut best = beta_ipm.clone();
    let mut best_res = adv_stationarity(&best, data, budget, CERTIFY_TOL)?;
    let ipm_obj = adv_risk(&best, data, budget)?;
    // prefer a certified face solution even when the raw iterate passes
    for &active in &ACTIVE_TOLS {
        let Some(cand) = polish(data, budget, &beta_ipm, active) else {
            continue;
        };
        let res = adv_stationarity(&cand, data, budget, CERTIFY_TOL)?;
        let obj = adv_risk(&cand, data, budget)?;
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

/// Builds and solves the conic program; returns `beta` and the number of
/// interior-point iterations.
fn solve_ipm(
    data: &Dataset,
    budget: &AttackBudget,
    config: &SolverConfig,
) -> Result<(DVector<f64>, usize)> {
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let scale = data.y().amax();
    if scale == 0.0 {
        return Ok((DVector::zeros(m), 0));
    }
    let y = data.y() / scale;
    let delta = budget.delta();
    let q1 = budget.p() == NormOrder::LInf;

    // variable layout: beta | w (l1 only) | u | t
    let w_off = m;
    let u_off = if q1 { 2 * m } else { m };
    let t_idx = u_off + n;
    let nvar = t_idx + 1;

    let mut p = DMatrix::zeros(nvar, nvar);
    let c2 = 2.0 / n as f64;
    for i in 0..n {
        p[(u_off + i, u_off + i)] = c2;
        p[(u_off + i, t_idx)] = c2 * delta;
        p[(t_idx, u_off + i)] = c2 * delta;
    }
    p[(t_idx, t_idx)] = c2 * n as f64 * delta * delta;

    let mut g: Vec<SparseRow> = Vec::new();
    let mut h = Vec::new();
    for sign in [-1.0, 1.0] {
        for i in 0..n {
            let mut row: SparseRow = (0..m)
                .filter(|&j| x[(i, j)] != 0.0)
                .map(|j| (j, sign * x[(i, j)]))
                .collect();
            row.push((u_off + i, -1.0));
            g.push(row);
            h.push(sign * y[i]);
        }
    }
    let mut cones = vec![];
    if q1 {
        for sign in [1.0, -1.0] {
            for j in 0..m {
                g.push(vec![(j, sign), (w_off + j, -1.0)]);
                h.push(0.0);
            }
        }
        let mut row: SparseRow = (0..m).map(|j| (w_off + j, 1.0)).collect();
        row.push((t_idx, -1.0));
        g.push(row);
        h.push(0.0);
        cones.push(Cone::NonNeg(2 * n + 2 * m + 1));
    } else {
        cones.push(Cone::NonNeg(2 * n));
        g.push(vec![(t_idx, -1.0)]);
        h.push(0.0);
        for j in 0..m {
            g.push(vec![(j, -1.0)]);
            h.push(0.0);
        }
        cones.push(Cone::Soc(m + 1));
    }

    let prog = ConicProgram {
        n: nvar,
        p: Some(p),
        c: DVector::zeros(nvar),
        g,
        h: DVector::from_vec(h),
        cones,
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

/// Re-solves the problem on the face of `candidate` identified with
/// relative tolerance `active_tol`.
fn polish(
    data: &Dataset,
    budget: &AttackBudget,
    candidate: &DVector<f64>,
    active_tol: f64,
) -> Option<DVector<f64>> {
    let x = data.x();
    let y = data.y();
    let (n, m) = (data.n(), data.m());
    let r = y - x * candidate;
    let tol_r = active_tol * (1.0 + y.amax());
    let tol_b = active_tol * candidate.amax().max(1e-300);
    let interpolated: Vec<usize> = (0..n).filter(|&i| r[i].abs() <= tol_r).collect();
    let signs: Vec<(usize, f64)> = (0..n)
        .filter(|&i| r[i].abs() > tol_r)
        .map(|i| (i, r[i].signum()))
        .collect();
    match budget.p() {
        NormOrder::LInf => {
            let support: Vec<usize> = (0..m).filter(|&j| candidate[j].abs() > tol_b).collect();
            if support.is_empty() {
                return Some(DVector::zeros(m));
            }
            let sigma: Vec<f64> = support.iter().map(|&j| candidate[j].signum()).collect();
            l1_face(data, budget.delta(), &support, &sigma, &interpolated, &signs)
        }
        NormOrder::L2 => {
            if candidate.norm() <= tol_b {
                return Some(DVector::zeros(m));
            }
            let face = L2Face {
                x,
                y,
                delta: budget.delta(),
                n: n as f64,
                signs: &signs,
                interpolated: interpolated.len() as f64,
            };
            let c = DMatrix::from_fn(interpolated.len(), m, |a, j| x[(interpolated[a], j)]);
            let d = DVector::from_iterator(interpolated.len(), interpolated.iter().map(|&i| y[i]));
            minimize_on_face(&face, &c, &d, candidate, 50)
        }
    }
}

/// On a face of the l1 problem the objective is a least-squares function of
/// `beta_S` under the interpolation constraints; solve its KKT system.
fn l1_face(
    data: &Dataset,
    delta: f64,
    support: &[usize],
    sigma: &[f64],
    interpolated: &[usize],
    signs: &[(usize, f64)],
) -> Option<DVector<f64>> {
    let x = data.x();
    let y = data.y();
    let n = data.n() as f64;
    let k = support.len();
    let nz = interpolated.len();
    let rows = signs.len() + 1;
    let mut a = DMatrix::zeros(rows, k);
    let mut b = DVector::zeros(rows);
    let inv_sqrt_n = 1.0 / n.sqrt();
    for (row, &(i, s)) in signs.iter().enumerate() {
        for (col, &j) in support.iter().enumerate() {
            a[(row, col)] = (-s * x[(i, j)] + delta * sigma[col]) * inv_sqrt_n;
        }
        b[row] = -s * y[i] * inv_sqrt_n;
    }
    let wz = (nz as f64 / n).sqrt() * delta;
    for (col, &sg) in sigma.iter().enumerate() {
        a[(rows - 1, col)] = wz * sg;
    }
    let c = DMatrix::from_fn(nz, k, |r, col| x[(interpolated[r], support[col])]);
    let d = DVector::from_iterator(nz, interpolated.iter().map(|&i| y[i]));

    let mut kkt = DMatrix::zeros(k + nz, k + nz);
    kkt.view_mut((0, 0), (k, k)).copy_from(&(a.transpose() * &a * 2.0));
    kkt.view_mut((k, 0), (nz, k)).copy_from(&c);
    kkt.view_mut((0, k), (k, nz)).copy_from(&c.transpose());
    let mut rhs = DVector::zeros(k + nz);
    rhs.rows_mut(0, k).copy_from(&(a.transpose() * &b * 2.0));
    rhs.rows_mut(k, nz).copy_from(&d);
    let mut sol = linalg::pseudo_solve(&kkt, &rhs).ok()?;
    // the penalty block scales like delta^2 against unit constraint rows
    for _ in 0..3 {
        let defect = &rhs - &kkt * &sol;
        sol += linalg::pseudo_solve(&kkt, &defect).ok()?;
    }
    let mut bs = sol.rows(0, k).into_owned();
    if nz > 0 {
        bs += linalg::pseudo_solve(&c, &(&d - &c * &bs)).ok()?;
        if (&c * &bs - &d).amax() > 1e-9 * (1.0 + d.amax()) {
            return None;
        }
    }
    let mut beta = DVector::zeros(data.m());
    for (col, &j) in support.iter().enumerate() {
        beta[j] = bs[col];
    }
    beta.iter().all(|v| v.is_finite()).then_some(beta)
}

/// Smooth restriction of the l2 problem: fixed residual signs outside the
/// interpolated set, `beta != 0`.
struct L2Face<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    delta: f64,
    n: f64,
    signs: &'a [(usize, f64)],
    interpolated: f64,
}

impl L2Face<'_> {
    fn term(&self, v: &DVector<f64>, i: usize, s: f64, norm: f64) -> f64 {
        s * (self.y[i] - self.x.row(i).transpose().dot(v)) + self.delta * norm
    }
}

impl SmoothFace for L2Face<'_> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        let sum: f64 = self
            .signs
            .iter()
            .map(|&(i, s)| self.term(v, i, s, norm).powi(2))
            .sum();
        (sum + self.interpolated * (self.delta * norm).powi(2)) / self.n
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let norm = v.norm();
        let unit = v / norm;
        let mut g = v * (self.interpolated * self.delta * self.delta);
        for &(i, s) in self.signs {
            let h = self.term(v, i, s, norm);
            let dh = &unit * self.delta - self.x.row(i).transpose() * s;
            g.axpy(h, &dh, 1.0);
        }
        g * (2.0 / self.n)
    }

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let m = v.len();
        let norm = v.norm();
        let unit = v / norm;
        let proj = (DMatrix::identity(m, m) - &unit * unit.transpose()) / norm;
        let mut hess = DMatrix::identity(m, m) * (self.interpolated * self.delta * self.delta);
        let mut curvature = 0.0;
        for &(i, s) in self.signs {
            let h = self.term(v, i, s, norm);
            let dh = &unit * self.delta - self.x.row(i).transpose() * s;
            hess.ger(1.0, &dh, &dh, 1.0);
            curvature += h;
        }
        hess += proj * (curvature * self.delta);
        hess * (2.0 / self.n)
    }
}
