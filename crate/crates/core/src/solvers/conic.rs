//! Dense primal-dual interior-point method for small conic quadratic programs
//!
//! ```text
//! minimize    1/2 x'Px + c'x
//! subject to  Gx + s = h,  Ax = b,  s in K
//! ```
//!
//! where K is a product of nonnegative orthants and second-order cones.
//! Nesterov-Todd scaling with a Mehrotra predictor-corrector; the Newton
//! systems are reduced to normal equations on x and solved by Cholesky with
//! iterative refinement. G is stored row-sparse because every program built
//! by this crate has mostly sparse constraint rows.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    NonNeg(usize),
    /// Second-order cone `{(t, v) : t >= ||v||_2}` of the given total size.
    Soc(usize),
}

impl Cone {
    fn dim(self) -> usize {
        match self {
            Cone::NonNeg(k) | Cone::Soc(k) => k,
        }
    }

    fn degree(self) -> usize {
        match self {
            Cone::NonNeg(k) => k,
            Cone::Soc(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConicProgram {
    pub n: usize,
    pub p: Option<DMatrix<f64>>,
    pub c: DVector<f64>,
    pub g: Vec<SparseRow>,
    pub h: DVector<f64>,
    pub cones: Vec<Cone>,
    pub a: Option<DMatrix<f64>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub max_iterations: usize,
    pub feas_tol: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            max_iterations: 120,
            feas_tol: 1e-10,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    /// Stopped early; the iterate is the best one seen.
    Inaccurate,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl IpmSolution {
    /// Relative duality gap, falling back to the absolute gap near zero.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.primal_objective.abs().max(self.dual_objective.abs());
        if scale > 1.0 {
            self.gap / scale
        } else {
            self.gap
        }
    }
}

/// Nesterov-Todd scaling for one cone block.
#[derive(Debug, Clone)]
enum BlockScaling {
    /// `W = diag(d)`
    NonNeg { d: Vec<f64> },
    /// `W = eta * [w0 w1'; w1 I + w1 w1'/(1 + w0)]` with `w0^2 - |w1|^2 = 1`.
    Soc { eta: f64, w: Vec<f64> },
}

struct Scaling {
    blocks: Vec<BlockScaling>,
    /// `lambda = W z = W^{-1} s`
    lambda: DVector<f64>,
}

impl ConicProgram {
    fn m(&self) -> usize {
        self.h.len()
    }

    fn p_times(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.p {
            Some(p) => p * x,
            None => DVector::zeros(self.n),
        }
    }

    fn g_times(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.g.len(),
            self.g.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    fn gt_times(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (row, &zi) in self.g.iter().zip(z.iter()) {
            if zi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * zi;
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let m: usize = self.cones.iter().map(|c| c.dim()).sum();
        if m != self.g.len() || m != self.h.len() {
            return Err(Error::DimensionMismatch(format!(
                "cone dimensions sum to {m} but G has {} rows and h has {}",
                self.g.len(),
                self.h.len()
            )));
        }
        if self.c.len() != self.n {
            return Err(Error::DimensionMismatch("objective length".into()));
        }
        if let Some(a) = &self.a {
            if a.ncols() != self.n || a.nrows() != self.b.len() {
                return Err(Error::DimensionMismatch("equality constraints".into()));
            }
        }
        if self
            .cones
            .iter()
            .any(|c| matches!(c, Cone::Soc(k) if *k < 2))
        {
            return Err(Error::InvalidParameter("second-order cone of size < 2".into()));
        }
        Ok(())
    }
}

/// Block iteration helper: `(cone, offset)` pairs.
fn blocks(cones: &[Cone]) -> impl Iterator<Item = (Cone, usize)> + '_ {
    cones.iter().scan(0usize, |off, &c| {
        let start = *off;
        *off += c.dim();
        Some((c, start))
    })
}

fn identity_element(cones: &[Cone], m: usize) -> DVector<f64> {
    let mut e = DVector::zeros(m);
    for (cone, off) in blocks(cones) {
        match cone {
            Cone::NonNeg(k) => e.rows_mut(off, k).fill(1.0),
            Cone::Soc(_) => e[off] = 1.0,
        }
    }
    e
}

/// Smallest "eigenvalue" of `v` with respect to the cone; negative means
/// `v` is outside.
fn min_eig(cones: &[Cone], v: &DVector<f64>) -> f64 {
    let mut out = f64::INFINITY;
    for (cone, off) in blocks(cones) {
        match cone {
            Cone::NonNeg(k) => {
                for i in off..off + k {
                    out = out.min(v[i]);
                }
            }
            Cone::Soc(k) => {
                let tail = v.rows(off + 1, k - 1).norm();
                out = out.min(v[off] - tail);
            }
        }
    }
    out
}

/// Jordan product `u o v`.
fn jordan(cones: &[Cone], u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(u.len());
    for (cone, off) in blocks(cones) {
        match cone {
            Cone::NonNeg(k) => {
                for i in off..off + k {
                    out[i] = u[i] * v[i];
                }
            }
            Cone::Soc(k) => {
                out[off] = u.rows(off, k).dot(&v.rows(off, k));
                for i in off + 1..off + k {
                    out[i] = u[off] * v[i] + v[off] * u[i];
                }
            }
        }
    }
    out
}

/// Solves `lambda o u = d` for `u`.
fn jordan_div(cones: &[Cone], lambda: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(d.len());
    for (cone, off) in blocks(cones) {
        match cone {
            Cone::NonNeg(k) => {
                for i in off..off + k {
                    out[i] = d[i] / lambda[i];
                }
            }
            Cone::Soc(k) => {
                let l0 = lambda[off];
                let l1 = lambda.rows(off + 1, k - 1);
                let d0 = d[off];
                let d1 = d.rows(off + 1, k - 1);
                let det = l0 * l0 - l1.norm_squared();
                let u0 = (l0 * d0 - l1.dot(&d1)) / det;
                out[off] = u0;
                for i in 1..k {
                    out[off + i] = (d[off + i] - u0 * lambda[off + i]) / l0;
                }
            }
        }
    }
    out
}

fn soc_det(v: &[f64]) -> f64 {
    let tail: f64 = v[1..].iter().map(|x| x * x).sum();
    (v[0] - tail.sqrt()) * (v[0] + tail.sqrt())
}

impl Scaling {
    fn new(cones: &[Cone], s: &DVector<f64>, z: &DVector<f64>) -> Result<Scaling> {
        let mut blocks_out = Vec::with_capacity(cones.len());
        let mut lambda = DVector::zeros(s.len());
        for (cone, off) in blocks(cones) {
            match cone {
                Cone::NonNeg(k) => {
                    let mut d = Vec::with_capacity(k);
                    for i in off..off + k {
                        d.push((s[i] / z[i]).sqrt());
                        lambda[i] = (s[i] * z[i]).sqrt();
                    }
                    blocks_out.push(BlockScaling::NonNeg { d });
                }
                Cone::Soc(k) => {
                    let sb = s.as_slice()[off..off + k].to_vec();
                    let zb = z.as_slice()[off..off + k].to_vec();
                    let js = soc_det(&sb);
                    let jz = soc_det(&zb);
                    if !(js > 0.0 && jz > 0.0) {
                        return Err(Error::Numerical("iterate left the second-order cone".into()));
                    }
                    let (rs, rz) = (js.sqrt(), jz.sqrt());
                    let sn: Vec<f64> = sb.iter().map(|v| v / rs).collect();
                    let zn: Vec<f64> = zb.iter().map(|v| v / rz).collect();
                    let dot: f64 = sn.iter().zip(&zn).map(|(a, b)| a * b).sum();
                    let gamma = ((1.0 + dot) / 2.0).sqrt();
                    let mut w = vec![0.0; k];
                    w[0] = (sn[0] + zn[0]) / (2.0 * gamma);
                    for i in 1..k {
                        w[i] = (sn[i] - zn[i]) / (2.0 * gamma);
                    }
                    // re-normalize to det(w) = 1 against rounding
                    let tail: f64 = w[1..].iter().map(|v| v * v).sum();
                    w[0] = (1.0 + tail).sqrt();
                    let eta = (js / jz).sqrt().sqrt();
                    let blk = BlockScaling::Soc { eta, w };
                    let lz = blk.apply(&zb, false);
                    for i in 0..k {
                        lambda[off + i] = lz[i];
                    }
                    blocks_out.push(blk);
                }
            }
        }
        Ok(Scaling {
            blocks: blocks_out,
            lambda,
        })
    }

    /// `W v` or `W^{-1} v` on the whole vector.
    fn apply(&self, cones: &[Cone], v: &DVector<f64>, inverse: bool) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for ((cone, off), blk) in blocks(cones).zip(&self.blocks) {
            let k = cone.dim();
            let r = blk.apply(&v.as_slice()[off..off + k], inverse);
            out.rows_mut(off, k).copy_from_slice(&r);
        }
        out
    }
}

impl BlockScaling {
    fn apply(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        match self {
            BlockScaling::NonNeg { d } => v
                .iter()
                .zip(d)
                .map(|(x, di)| if inverse { x / di } else { x * di })
                .collect(),
            BlockScaling::Soc { eta, w } => {
                // W^{-1} = (1/eta) J Wbar J, i.e. flip the sign of w1.
                let sign = if inverse { -1.0 } else { 1.0 };
                let scale = if inverse { 1.0 / eta } else { *eta };
                let w0 = w[0];
                let w1v: f64 = w[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
                let mut out = vec![0.0; v.len()];
                out[0] = scale * (w0 * v[0] + sign * w1v);
                let coef = sign * v[0] + w1v / (1.0 + w0);
                for i in 1..v.len() {
                    out[i] = scale * (v[i] + coef * w[i]);
                }
                out
            }
        }
    }
}

/// Largest step `alpha` such that `v + alpha dv` stays in the cone
/// (infinity when unbounded).
fn max_step(cones: &[Cone], v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for (cone, off) in blocks(cones) {
        match cone {
            Cone::NonNeg(k) => {
                for i in off..off + k {
                    if dv[i] < 0.0 {
                        alpha = alpha.min(-v[i] / dv[i]);
                    }
                }
            }
            Cone::Soc(k) => {
                let vb = &v.as_slice()[off..off + k];
                let db = &dv.as_slice()[off..off + k];
                // det(v + a dv) = c + 2 b a + q a^2
                let c = soc_det(vb);
                let b = vb[0] * db[0] - vb[1..].iter().zip(&db[1..]).map(|(x, y)| x * y).sum::<f64>();
                let q = db[0] * db[0] - db[1..].iter().map(|x| x * x).sum::<f64>();
                let root = smallest_positive_root(q, b, c);
                alpha = alpha.min(root);
                if db[0] < 0.0 {
                    alpha = alpha.min(-vb[0] / db[0]);
                }
            }
        }
    }
    alpha
}

/// Smallest positive root of `q a^2 + 2 b a + c` given `c > 0`.
fn smallest_positive_root(q: f64, b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if q.abs() < 1e-300 {
        return if b < 0.0 { -c / (2.0 * b) } else { f64::INFINITY };
    }
    let disc = b * b - q * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let t = -(b + b.signum() * sq);
    let (r1, r2) = if t != 0.0 { (t / q, c / t) } else { (-b / q, -b / q) };
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Factorization of the reduced Newton system
/// `[H A'; A 0] [dx; dy] = [rx; ry]` with `H = P + G' W^{-2} G`.
struct ReducedSystem<'a> {
    prog: &'a ConicProgram,
    h_mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    schur: Option<(DMatrix<f64>, Cholesky<f64, Dyn>)>,
}

impl<'a> ReducedSystem<'a> {
    fn new(prog: &'a ConicProgram, scaling: &Scaling) -> Result<Self> {
        let n = prog.n;
        let mut h_mat = match &prog.p {
            Some(p) => p.clone(),
            None => DMatrix::zeros(n, n),
        };
        for ((cone, off), blk) in blocks(&prog.cones).zip(&scaling.blocks) {
            match (cone, blk) {
                (Cone::NonNeg(k), BlockScaling::NonNeg { d }) => {
                    for i in 0..k {
                        let row = &prog.g[off + i];
                        let wt = 1.0 / (d[i] * d[i]);
                        for &(j1, v1) in row {
                            for &(j2, v2) in row {
                                h_mat[(j1, j2)] += wt * v1 * v2;
                            }
                        }
                    }
                }
                (Cone::Soc(k), blk) => {
                    // dense block restricted to its support columns
                    let mut cols: Vec<usize> = prog.g[off..off + k]
                        .iter()
                        .flat_map(|r| r.iter().map(|&(j, _)| j))
                        .collect();
                    cols.sort_unstable();
                    cols.dedup();
                    let mut scaled = DMatrix::zeros(k, cols.len());
                    let mut column = vec![0.0; k];
                    for (cj, &j) in cols.iter().enumerate() {
                        column.iter_mut().for_each(|v| *v = 0.0);
                        for (i, row) in prog.g[off..off + k].iter().enumerate() {
                            for &(jj, v) in row {
                                if jj == j {
                                    column[i] += v;
                                }
                            }
                        }
                        let sc = blk.apply(&column, true);
                        scaled.column_mut(cj).copy_from_slice(&sc);
                    }
                    let gram = scaled.tr_mul(&scaled);
                    for (a, &ja) in cols.iter().enumerate() {
                        for (b, &jb) in cols.iter().enumerate() {
                            h_mat[(ja, jb)] += gram[(a, b)];
                        }
                    }
                }
                _ => unreachable!("scaling block does not match cone"),
            }
        }
        let chol = regularized_cholesky(&h_mat)?;
        let schur = match &prog.a {
            Some(a) if a.nrows() > 0 => {
                let hinv_at = chol.solve(&a.transpose());
                let s = a * &hinv_at;
                let sc = regularized_cholesky(&s)?;
                Some((s, sc))
            }
            _ => None,
        };
        Ok(ReducedSystem {
            prog,
            h_mat,
            chol,
            schur,
        })
    }

    fn solve_once(&self, rx: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match (&self.prog.a, &self.schur) {
            (Some(a), Some((_, sc))) => {
                let hr = self.chol.solve(rx);
                let dy = sc.solve(&(a * &hr - ry));
                let dx = self.chol.solve(&(rx - a.tr_mul(&dy)));
                (dx, dy)
            }
            _ => (self.chol.solve(rx), DVector::zeros(0)),
        }
    }

    fn solve(&self, rx: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dx, mut dy) = self.solve_once(rx, ry);
        for _ in 0..3 {
            let mut ex = rx - &self.h_mat * &dx;
            let mut ey = ry.clone();
            if let Some(a) = &self.prog.a {
                ex -= a.tr_mul(&dy);
                ey -= a * &dx;
            }
            let scale = rx.amax().max(ry.amax()).max(1e-300);
            if ex.amax().max(ey.amax()) <= 1e-15 * scale {
                break;
            }
            let (cx, cy) = self.solve_once(&ex, &ey);
            dx += cx;
            if !dy.is_empty() {
                dy += cy;
            }
        }
        (dx, dy)
    }
}

fn regularized_cholesky(mat: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = mat.clone().cholesky() {
        return Ok(c);
    }
    let diag_max = mat.diagonal().amax().max(1e-300);
    let mut reg = 1e-14 * diag_max;
    for _ in 0..12 {
        let mut shifted = mat.clone();
        for i in 0..mat.nrows() {
            shifted[(i, i)] += reg;
        }
        if let Some(c) = shifted.cholesky() {
            return Ok(c);
        }
        reg *= 100.0;
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

/// Solves the KKT system for a given scaling and right-hand side:
///
/// ```text
/// P dx + A'dy + G'dz = bx
/// A dx               = by
/// G dx - W^2 dz      = bz
/// ```
fn solve_kkt(
    prog: &ConicProgram,
    sys: &ReducedSystem<'_>,
    scaling: &Scaling,
    bx: &DVector<f64>,
    by: &DVector<f64>,
    bz: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let cones = &prog.cones;
    let winv2 = |v: &DVector<f64>| scaling.apply(cones, &scaling.apply(cones, v, true), true);
    let w2 = |v: &DVector<f64>| scaling.apply(cones, &scaling.apply(cones, v, false), false);
    let once = |bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>| {
        let rx = bx + prog.gt_times(&winv2(bz));
        let (dx, dy) = sys.solve(&rx, by);
        let dz = winv2(&(prog.g_times(&dx) - bz));
        (dx, dy, dz)
    };
    let (mut dx, mut dy, mut dz) = once(bx, by, bz);
    let scale = bx.amax().max(by.amax()).max(bz.amax()).max(1e-300);
    for _ in 0..3 {
        let mut ex = bx - prog.p_times(&dx) - prog.gt_times(&dz);
        let mut ey = by.clone();
        if let Some(a) = &prog.a {
            ex -= a.tr_mul(&dy);
            ey -= a * &dx;
        }
        let ez = bz - prog.g_times(&dx) + w2(&dz);
        if ex.amax().max(ey.amax()).max(ez.amax()) <= 1e-15 * scale {
            break;
        }
        let (cx, cy, cz) = once(&ex, &ey, &ez);
        dx += cx;
        if !dy.is_empty() {
            dy += cy;
        }
        dz += cz;
    }
    (dx, dy, dz)
}

pub(crate) fn solve(prog: &ConicProgram, settings: &IpmSettings) -> Result<IpmSolution> {
    prog.validate()?;
    let cones = &prog.cones;
    let m = prog.m();
    let neq = prog.b.len();
    let degree: usize = cones.iter().map(|c| c.degree()).sum();
    let e = identity_element(cones, m);

    // Initial point from the least-squares KKT system with W = I.
    let unit = Scaling {
        blocks: cones
            .iter()
            .map(|c| match *c {
                Cone::NonNeg(k) => BlockScaling::NonNeg { d: vec![1.0; k] },
                Cone::Soc(k) => {
                    let mut w = vec![0.0; k];
                    w[0] = 1.0;
                    BlockScaling::Soc { eta: 1.0, w }
                }
            })
            .collect(),
        lambda: e.clone(),
    };
    let sys0 = ReducedSystem::new(prog, &unit)?;
    let (mut x, mut y, z0) = solve_kkt(prog, &sys0, &unit, &(-&prog.c), &prog.b, &prog.h);
    if y.len() != neq {
        y = DVector::zeros(neq);
    }
    let mut s = -&z0;
    let mut z = z0;
    let nrms = s.norm().max(1.0);
    let ts = -min_eig(cones, &s);
    if ts >= -1e-8 * nrms {
        s += (1.0 + ts) * &e;
    }
    let nrmz = z.norm().max(1.0);
    let tz = -min_eig(cones, &z);
    if tz >= -1e-8 * nrmz {
        z += (1.0 + tz) * &e;
    }

    let resx0 = prog.c.norm().max(1.0);
    let resy0 = prog.b.norm().max(1.0);
    let resz0 = prog.h.norm().max(1.0);

    let mut best: Option<IpmSolution> = None;
    let mut iterations = 0;
    loop {
        let px = prog.p_times(&x);
        let gx = prog.g_times(&x);
        let mut rx = &px + &prog.c + prog.gt_times(&z);
        let ry = match &prog.a {
            Some(a) => {
                rx += a.tr_mul(&y);
                a * &x - &prog.b
            }
            None => DVector::zeros(0),
        };
        let rz = &gx + &s - &prog.h;
        let gap = s.dot(&z);
        let pcost = 0.5 * x.dot(&px) + prog.c.dot(&x);
        let dcost = pcost + y.dot(&ry) + z.dot(&(&gx - &prog.h));
        let pres = (ry.norm() / resy0).max(rz.norm() / resz0);
        let dres = rx.norm() / resx0;
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };

        if std::env::var_os("ADVREG_IPM_TRACE").is_some() {
            eprintln!("it {iterations:3} pcost {pcost:+.9e} dcost {dcost:+.9e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e}");
        }
        let current = IpmSolution {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
            s: s.clone(),
            status: IpmStatus::Inaccurate,
            iterations,
            primal_objective: pcost,
            dual_objective: dcost,
            gap,
            primal_residual: pres,
            dual_residual: dres,
        };
        let merit = |sol: &IpmSolution| {
            sol.primal_residual
                .max(sol.dual_residual)
                .max(sol.relative_gap())
        };
        if best.as_ref().is_none_or(|b| merit(&current) <= merit(b)) {
            best = Some(current);
        }

        if pres <= settings.feas_tol
            && dres <= settings.feas_tol
            && (gap <= settings.abs_tol || relgap <= settings.rel_tol)
        {
            let mut out = best.take().expect("best iterate recorded");
            out.x = x;
            out.y = y;
            out.z = z;
            out.s = s;
            out.primal_objective = pcost;
            out.dual_objective = dcost;
            out.gap = gap;
            out.primal_residual = pres;
            out.dual_residual = dres;
            out.iterations = iterations;
            out.status = IpmStatus::Optimal;
            return Ok(out);
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        let scaling = match Scaling::new(cones, &s, &z) {
            Ok(sc) => sc,
            Err(_) => break,
        };
        let sys = match ReducedSystem::new(prog, &scaling) {
            Ok(sys) => sys,
            Err(_) => break,
        };
        let lambda = &scaling.lambda;
        let lambda_sq = jordan(cones, lambda, lambda);
        let mu = gap / degree.max(1) as f64;

        // direction for a complementarity right-hand side `ds_rhs`
        let direction = |ds_rhs: &DVector<f64>| {
            let ldiv = jordan_div(cones, lambda, ds_rhs);
            let w_ldiv = scaling.apply(cones, &ldiv, false);
            let bz = -&rz - &w_ldiv;
            let (dx, dy, dz) = solve_kkt(prog, &sys, &scaling, &(-&rx), &(-&ry), &bz);
            let wdz = scaling.apply(cones, &dz, false);
            let ds_scaled = &ldiv - &wdz;
            let ds = scaling.apply(cones, &ds_scaled, false);
            (dx, dy, dz, ds, ds_scaled, wdz)
        };

        // predictor
        let (_, _, dz_a, ds_a, ds_scaled_a, wdz_a) = direction(&(-&lambda_sq));
        let alpha_a = max_step(cones, &s, &ds_a)
            .min(max_step(cones, &z, &dz_a))
            .min(1.0);
        let sigma = (1.0 - alpha_a).max(0.0).powi(3);

        // corrector
        let cross = jordan(cones, &ds_scaled_a, &wdz_a);
        let rhs = -&lambda_sq - cross + (sigma * mu) * &e;
        let (dx, dy, dz, ds, _, _) = direction(&rhs);
        if !(dx.iter().chain(dz.iter()).chain(ds.iter()).all(|v| v.is_finite())) {
            break;
        }
        let alpha_max = max_step(cones, &s, &ds).min(max_step(cones, &z, &dz));
        let alpha = (0.99 * alpha_max).min(1.0);
        if alpha < 1e-12 {
            break;
        }
        x += alpha * &dx;
        if !dy.is_empty() {
            y += alpha * &dy;
        }
        s += alpha * &ds;
        z += alpha * &dz;
    }

    best.ok_or_else(|| Error::Numerical("interior-point method produced no iterate".into()))
}
