//! Minimum-l1-norm interpolation (basis pursuit) as a linear program, and
//! the dual certificate used by the exact interpolation thresholds.

use nalgebra::{DMatrix, DVector};

use super::conic::{self, Cone, ConicProgram, IpmSettings, SparseRow};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Dataset, FitResult, Method, SolverConfig};

fn lp_settings(config: &SolverConfig) -> IpmSettings {
    IpmSettings {
        max_iterations: config.max_iterations.min(200),
        feas_tol: 1e-11,
        abs_tol: 1e-13,
        rel_tol: 1e-12,
    }
}

/// Equality constraints `A beta = b` equivalent to `X beta = y`, with `A`
/// of full row rank, and the map `U` taking multipliers of `A` back to
/// multipliers of `X` (`X'U = A'`, `y'U = b'`).
struct Reduced {
    a: DMatrix<f64>,
    b: DVector<f64>,
    back: Option<DMatrix<f64>>,
}

fn reduce(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Reduced> {
    let n = x.nrows();
    let rank = linalg::numerical_rank(x);
    if rank == n {
        return Ok(Reduced {
            a: x.clone(),
            b: y.clone(),
            back: None,
        });
    }
    if rank == 0 {
        if y.amax() == 0.0 {
            return Ok(Reduced {
                a: DMatrix::zeros(0, x.ncols()),
                b: DVector::zeros(0),
                back: Some(DMatrix::zeros(n, 0)),
            });
        }
        return Err(Error::Infeasible("X is zero but y is not".into()));
    }
    let svd = x.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let keep = &order[..rank];
    let ur = DMatrix::from_fn(n, rank, |i, k| u[(i, keep[k])]);
    let a = DMatrix::from_fn(rank, x.ncols(), |k, j| svd.singular_values[keep[k]] * vt[(keep[k], j)]);
    let b = ur.transpose() * y;
    let outside = (y - &ur * &b).norm();
    if outside > 1e-9 * y.norm().max(1e-300) {
        return Err(Error::Infeasible(format!(
            "X beta = y has no solution (rank {rank} < {n}, residual {outside:.3e})"
        )));
    }
    Ok(Reduced { a, b, back: Some(ur) })
}

/// Basis pursuit `min ||beta||_1 s.t. X beta = y`.
///
/// The reported `optimality_residual` is the larger of the relative duality
/// gap against a feasible dual point `nu` (`||X'nu||_inf <= 1`) and the
/// relative interpolation error.
pub fn min_l1_interpolator(data: &Dataset, config: &SolverConfig) -> Result<FitResult> {
    config.validate()?;
    let x = data.x();
    let y = data.y();
    let (n, m) = (data.n(), data.m());
    let red = reduce(x, y)?;
    let scale = y.amax();
    if scale == 0.0 {
        return Ok(FitResult {
            beta: vec![0.0; m],
            objective: 0.0,
            iterations: 0,
            converged: true,
            optimality_residual: 0.0,
            method: Method::MinL1Interp,
        });
    }
    let k = red.a.nrows();
    // beta | w
    let mut c = DVector::zeros(2 * m);
    for j in 0..m {
        c[m + j] = 1.0;
    }
    let mut g: Vec<SparseRow> = Vec::new();
    for sign in [1.0, -1.0] {
        for j in 0..m {
            g.push(vec![(j, sign), (m + j, -1.0)]);
        }
    }
    let mut a = DMatrix::zeros(k, 2 * m);
    a.columns_mut(0, m).copy_from(&red.a);
    let prog = ConicProgram {
        n: 2 * m,
        p: None,
        c,
        g,
        h: DVector::zeros(2 * m),
        cones: vec![Cone::NonNeg(2 * m)],
        a: Some(a),
        b: &red.b / scale,
    };
    let sol = conic::solve(&prog, &lp_settings(config))?;
    let beta_ipm: DVector<f64> = sol.x.rows(0, m).into_owned() * scale;
    let mult = -&sol.y * scale.recip();
    let nu_ipm: DVector<f64> = match &red.back {
        None => mult,
        Some(u) => u * mult,
    };

    let feas = |b: &DVector<f64>| (x * b - y).norm() / y.norm().max(1.0);
    let mut beta = beta_ipm.clone();
    if let Some(p) = polish(x, y, &beta_ipm) {
        let tight = feas(&p) <= feas(&beta_ipm).max(1e-12);
        if tight && p.lp_norm(1) <= beta_ipm.lp_norm(1) * (1.0 + 1e-9) {
            beta = p;
        }
    }

    // best feasible dual value among the IPM multipliers and the support
    // system X_S' nu = sign(beta_S)
    let mut dual = f64::NEG_INFINITY;
    let mut candidates = vec![nu_ipm];
    let support: Vec<usize> = (0..m).filter(|&j| beta[j] != 0.0).collect();
    if !support.is_empty() {
        let xs = DMatrix::from_fn(n, support.len(), |i, a| x[(i, support[a])]);
        let sg = DVector::from_iterator(support.len(), support.iter().map(|&j| beta[j].signum()));
        if let Ok(nu) = linalg::pseudo_solve(&xs.transpose(), &sg) {
            candidates.push(nu);
        }
    }
    for nu in candidates {
        let viol = (x.transpose() * &nu).amax();
        if !viol.is_finite() || viol == 0.0 {
            continue;
        }
        let nu = nu / viol.max(1.0);
        dual = dual.max(y.dot(&nu));
    }
    let primal = beta.lp_norm(1);
    let gap = (primal - dual).max(0.0) / primal.max(1e-300);
    let residual = gap.max(feas(&beta));
    Ok(FitResult {
        beta: beta.as_slice().to_vec(),
        objective: primal,
        iterations: sol.iterations,
        converged: residual <= config.tolerance,
        optimality_residual: residual,
        method: Method::MinL1Interp,
    })
}

/// Snap to the vertex on the identified support.
fn polish(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let m = beta.len();
    let top = beta.amax();
    if top == 0.0 {
        return None;
    }
    let support: Vec<usize> = (0..m).filter(|&j| beta[j].abs() > 1e-9 * top).collect();
    if support.len() > x.nrows() {
        return None;
    }
    let xs = DMatrix::from_fn(x.nrows(), support.len(), |i, a| x[(i, support[a])]);
    if linalg::numerical_rank(&xs) < support.len() {
        return None;
    }
    let bs = linalg::pseudo_solve(&xs, y).ok()?;
    let bs = &bs + linalg::pseudo_solve(&xs, &(y - &xs * &bs)).ok()?;
    let mut out = DVector::zeros(m);
    for (a, &j) in support.iter().enumerate() {
        if bs[a].signum() != beta[j].signum() {
            return None;
        }
        out[j] = bs[a];
    }
    Some(out)
}

/// `min ||nu||_inf` over the optimal dual face of basis pursuit,
/// `{nu : ||X'nu||_inf <= 1, y'nu = min ||beta||_1}`.
///
/// Returns infinity when `y = 0`.
pub fn min_linf_dual_certificate(data: &Dataset, config: &SolverConfig) -> Result<f64> {
    let x = data.x();
    let (n, m) = (data.n(), data.m());
    let scale = data.y().amax();
    if scale == 0.0 {
        return Ok(f64::INFINITY);
    }
    let primal = min_l1_interpolator(data, config)?;
    let y = data.y() / scale;
    let opt = primal.objective / scale;
    // nu | tau
    let tau = n;
    let mut c = DVector::zeros(n + 1);
    c[tau] = 1.0;
    let mut g: Vec<SparseRow> = Vec::new();
    let mut h = Vec::new();
    for sign in [1.0, -1.0] {
        for i in 0..n {
            g.push(vec![(i, sign), (tau, -1.0)]);
            h.push(0.0);
        }
    }
    for sign in [1.0, -1.0] {
        for j in 0..m {
            g.push((0..n).filter(|&i| x[(i, j)] != 0.0).map(|i| (i, sign * x[(i, j)])).collect());
            h.push(1.0);
        }
    }
    g.push((0..n).filter(|&i| y[i] != 0.0).map(|i| (i, -y[i])).collect());
    h.push(-opt * (1.0 - 1e-9));
    let prog = ConicProgram {
        n: n + 1,
        p: None,
        c,
        g,
        h: DVector::from_vec(h),
        cones: vec![Cone::NonNeg(2 * n + 2 * m + 1)],
        a: None,
        b: DVector::zeros(0),
    };
    let sol = conic::solve(&prog, &lp_settings(config))?;
    let nu = sol.x.rows(0, n).into_owned();
    let viol = (x.transpose() * &nu).amax().max(1.0);
    let value = nu.amax() / viol;
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Numerical("dual certificate LP failed".into()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_puts_mass_on_largest_entry() {
        let d = Dataset::from_rows(&[vec![2.0, 1.0]], &[2.0]).unwrap();
        let fit = min_l1_interpolator(&d, &SolverConfig::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((fit.beta[0] - 1.0).abs() < 1e-9 && fit.beta[1].abs() < 1e-9, "{:?}", fit.beta);
    }

    #[test]
    fn tied_columns_value_only() {
        let d = Dataset::from_rows(&[vec![1.0, 1.0]], &[2.0]).unwrap();
        let fit = min_l1_interpolator(&d, &SolverConfig::default()).unwrap();
        assert!((fit.objective - 2.0).abs() < 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn inconsistent_rank_deficient_system() {
        let d = Dataset::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], &[1.0, 3.0]).unwrap();
        assert!(matches!(
            min_l1_interpolator(&d, &SolverConfig::default()),
            Err(Error::Infeasible(_))
        ));
        let d = Dataset::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], &[1.0, 2.0]).unwrap();
        let fit = min_l1_interpolator(&d, &SolverConfig::default()).unwrap();
        assert!((fit.objective - 1.0).abs() < 1e-9 && fit.converged, "{fit:?}");
    }

    #[test]
    fn dual_certificate_single_sample() {
        // x = (3, -4, 1), y = 2: nu = 1/4 is the only optimal dual point
        let d = Dataset::from_rows(&[vec![3.0, -4.0, 1.0]], &[2.0]).unwrap();
        let v = min_linf_dual_certificate(&d, &SolverConfig::default()).unwrap();
        assert!((v - 0.25).abs() < 1e-8, "{v}");
    }
}
