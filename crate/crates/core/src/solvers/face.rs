//! Damped Newton method for a smooth convex function restricted to an
//! affine set `{v : C v = d}`.
//!
//! Used to polish interior-point solutions once the active sets (zero
//! coefficients, interpolated samples, residual signs) are known: on that
//! face the non-smooth objectives become smooth.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

pub(crate) trait SmoothFace {
    fn dim(&self) -> usize;
    fn value(&self, v: &DVector<f64>) -> f64;
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64>;
}

/// Minimizes `face` subject to `c v = d` from `start`. Returns `None` when
/// the constraints cannot be met or a step produces non-finite values.
pub(crate) fn minimize_on_face<F: SmoothFace>(
    face: &F,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    start: &DVector<f64>,
    max_iterations: usize,
) -> Option<DVector<f64>> {
    let k = face.dim();
    let p = c.nrows();
    let mut v = start.clone();
    if p > 0 {
        let defect = d - c * &v;
        let fix = linalg::pseudo_solve(c, &defect).ok()?;
        v += fix;
        let scale = d.amax().max(1.0);
        if (d - c * &v).amax() > 1e-9 * scale {
            return None;
        }
    }
    let mut value = face.value(&v);
    if !value.is_finite() {
        return None;
    }
    for _ in 0..max_iterations {
        let g = face.gradient(&v);
        let h = face.hessian(&v);
        let mut kkt = DMatrix::zeros(k + p, k + p);
        kkt.view_mut((0, 0), (k, k)).copy_from(&h);
        if p > 0 {
            kkt.view_mut((k, 0), (p, k)).copy_from(c);
            kkt.view_mut((0, k), (k, p)).copy_from(&c.transpose());
        }
        let mut rhs = DVector::zeros(k + p);
        rhs.rows_mut(0, k).copy_from(&(-&g));
        let sol = linalg::pseudo_solve(&kkt, &rhs).ok()?;
        let step = sol.rows(0, k).into_owned();
        let decrement = -g.dot(&step);
        if !(decrement > 1e-30 * value.abs().max(1e-300)) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = &v + &step * t;
            let tv = face.value(&trial);
            if tv.is_finite() && tv <= value - 0.25 * t * decrement {
                v = trial;
                value = tv;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || step.amax() * t <= 1e-16 * v.amax().max(1e-300) {
            break;
        }
    }
    if p > 0 {
        // Newton steps drift off C v = d by round-off
        v += linalg::pseudo_solve(c, &(d - c * &v)).ok()?;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;

    impl SmoothFace for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, v: &DVector<f64>) -> f64 {
            (v[0] - 1.0).powi(2) + 2.0 * (v[1] + 1.0).powi(2)
        }
        fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![2.0 * (v[0] - 1.0), 4.0 * (v[1] + 1.0)])
        }
        fn hessian(&self, _: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]))
        }
    }

    #[test]
    fn constrained_quadratic() {
        // on v0 + v1 = 0: minimize (a - 1)^2 + 2 (1 - a)^2 -> a = 1
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let d = DVector::from_vec(vec![0.0]);
        let v = minimize_on_face(&Quadratic, &c, &d, &DVector::zeros(2), 20).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn unconstrained_quadratic() {
        let v = minimize_on_face(&Quadratic, &DMatrix::zeros(0, 2), &DVector::zeros(0), &DVector::zeros(2), 20)
            .unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
    }
}
