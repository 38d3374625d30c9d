//! Distance from the origin to a subdifferential of the form
//! `{v0 + B s + U u : ||s||_inf <= 1, ||u||_2 <= 1}`.
//!
//! Every estimator in the crate has a subdifferential of this shape once the
//! active sets are fixed, so this is the common stationarity test.

use nalgebra::{DMatrix, DVector};

use super::conic::{self, Cone, ConicProgram, IpmSettings, SparseRow};
use crate::linalg;

/// `min ||v0 + B s + U u||_2` over the box and the unit ball.
pub(crate) fn min_norm_element(
    v0: &DVector<f64>,
    boxed: &DMatrix<f64>,
    ball: Option<&DMatrix<f64>>,
) -> f64 {
    let dim = v0.len();
    let kb = boxed.ncols();
    let ku = ball.map_or(0, |u| u.ncols());
    if kb + ku == 0 {
        return v0.norm();
    }
    let scale = v0
        .amax()
        .max(boxed.amax())
        .max(ball.map_or(0.0, |u| u.amax()));
    if scale == 0.0 {
        return 0.0;
    }

    // Unconstrained least squares first; exact when it lands inside.
    let mut joined = DMatrix::zeros(dim, kb + ku);
    joined.columns_mut(0, kb).copy_from(boxed);
    if let Some(u) = ball {
        joined.columns_mut(kb, ku).copy_from(u);
    }
    let mut best = v0.norm();
    if let Ok(w) = linalg::pseudo_solve(&joined, &(-v0)) {
        let box_ok = w.rows(0, kb).iter().all(|v| v.abs() <= 1.0 + 1e-12);
        let ball_ok = ku == 0 || w.rows(kb, ku).norm() <= 1.0 + 1e-12;
        if box_ok && ball_ok {
            let mut w = w;
            for v in w.rows_mut(0, kb).iter_mut() {
                *v = v.clamp(-1.0, 1.0);
            }
            if ku > 0 {
                let norm = w.rows(kb, ku).norm();
                if norm > 1.0 {
                    w.rows_mut(kb, ku).scale_mut(1.0 / norm);
                }
            }
            return (v0 + &joined * w).norm();
        }
    }

    // Otherwise a small second-order cone program in (s, u, t).
    let nvar = kb + ku + 1;
    let t_idx = kb + ku;
    let mut g: Vec<SparseRow> = Vec::new();
    let mut h = Vec::new();
    let mut cones = Vec::new();
    if kb > 0 {
        for i in 0..kb {
            g.push(vec![(i, 1.0)]);
            h.push(1.0);
        }
        for i in 0..kb {
            g.push(vec![(i, -1.0)]);
            h.push(1.0);
        }
        cones.push(Cone::NonNeg(2 * kb));
    }
    if ku > 0 {
        g.push(vec![]);
        h.push(1.0);
        for i in 0..ku {
            g.push(vec![(kb + i, -1.0)]);
            h.push(0.0);
        }
        cones.push(Cone::Soc(ku + 1));
    }
    g.push(vec![(t_idx, -1.0)]);
    h.push(0.0);
    for r in 0..dim {
        let row: SparseRow = (0..kb + ku)
            .filter_map(|j| {
                let v = joined[(r, j)] / scale;
                (v != 0.0).then_some((j, -v))
            })
            .collect();
        g.push(row);
        h.push(v0[r] / scale);
    }
    cones.push(Cone::Soc(dim + 1));
    let mut c = DVector::zeros(nvar);
    c[t_idx] = 1.0;
    let prog = ConicProgram {
        n: nvar,
        p: None,
        c,
        g,
        h: DVector::from_vec(h),
        cones,
        a: None,
        b: DVector::zeros(0),
    };
    let settings = IpmSettings {
        abs_tol: 1e-14,
        ..IpmSettings::default()
    };
    if let Ok(sol) = conic::solve(&prog, &settings) {
        let mut w = sol.x.rows(0, kb + ku).into_owned();
        for v in w.rows_mut(0, kb).iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        if ku > 0 {
            let norm = w.rows(kb, ku).norm();
            if norm > 1.0 {
                w.rows_mut(kb, ku).scale_mut(1.0 / norm);
            }
        }
        best = best.min((v0 + &joined * w).norm());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_solution_is_exact() {
        let v0 = DVector::from_vec(vec![0.5, -0.25]);
        let b = DMatrix::identity(2, 2);
        assert!(min_norm_element(&v0, &b, None) < 1e-15);
    }

    #[test]
    fn box_binds() {
        // v0 = (3, 0), one box column e1: best is s = -1, residual 2
        let v0 = DVector::from_vec(vec![3.0, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!((min_norm_element(&v0, &b, None) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn ball_binds() {
        let v0 = DVector::from_vec(vec![3.0, 4.0]);
        let u = DMatrix::identity(2, 2);
        let d = min_norm_element(&v0, &DMatrix::zeros(2, 0), Some(&u));
        assert!((d - 4.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn box_with_coupled_columns() {
        // columns (1, 1) and (1, -1); target -v0 = (3, 1) needs s = (2, 1): clipped
        let v0 = DVector::from_vec(vec![-3.0, -1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        // best feasible: s1 = 1, s2 minimizes (-2 + s2)^2 + (0 - s2)^2 -> s2 = 1: residual sqrt(2)
        let d = min_norm_element(&v0, &b, None);
        assert!((d - 2f64.sqrt()).abs() < 1e-8, "{d}");
    }
}
