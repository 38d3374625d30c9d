//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cutoff used for numerical rank decisions.
fn rank_tolerance(m: &DMatrix<f64>, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Numerical rank from the singular values.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.amax();
    if smax == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(m, smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Fails unless `x` has full row rank.
pub fn require_full_row_rank(x: &DMatrix<f64>) -> Result<()> {
    let rank = numerical_rank(x);
    if rank < x.nrows() {
        return Err(Error::RankDeficient {
            rank,
            required: x.nrows(),
        });
    }
    Ok(())
}

/// Orthonormal basis of the row space of a full-row-rank matrix, one basis
/// vector per row. Computed from the reduced QR factorization of `x'`, with
/// each row's first non-negligible entry made positive.
pub fn orthonormal_row_basis(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_full_row_rank(x)?;
    let qr = x.transpose().qr();
    let mut q = qr.q().transpose();
    for mut row in q.row_iter_mut() {
        let scale = row.amax();
        if let Some(first) = row.iter().copied().find(|v| v.abs() > 1e-12 * scale) {
            if first < 0.0 {
                row.neg_mut();
            }
        }
    }
    Ok(q)
}

/// Least-squares / minimum-norm solution of `a v = b` via the SVD.
pub fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.amax();
    let eps = rank_tolerance(a, smax).max(1e-300);
    svd.solve(b, eps)
        .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))
}

/// Solves the symmetric positive-definite system `a v = b`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}
