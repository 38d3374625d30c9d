//! The ten acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use advreg::experiments::{
    detect_interpolation_transition, default_grid, generate_isotropic, log_grid,
    regularization_path, standardize, IsotropicSpec, TRANSITION_TOL,
};
use advreg::objective::{
    adv_risk, adv_risk_subgradient, adv_stationarity, robust_risk_featurewise,
    robust_risk_samplewise, worst_case_attack,
};
use advreg::solvers::{
    adversarial_zero_threshold, fit, fit_adversarial, fit_lasso, fit_ridge, fit_sqrt_lasso,
    lasso_kkt_residual, min_l1_interpolator, min_l2_interpolator, ridge_system_residual,
    sqrt_lasso_stationarity, EstimatorSpec,
};
use advreg::thresholds::{gamma_min, interpolation_thresholds};
use advreg::{AttackBudget, Dataset, FitResult, Method, NormOrder, RngSeed, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Outcome {
    let t = start.elapsed();
    check(t <= limit, || format!("took {t:?}, limit {limit:?}"))
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gdata(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset {
    Dataset::new(gaussian(rng, n, m), gvec(rng, n)).unwrap()
}

fn in_l2_ball(rng: &mut ChaCha8Rng, len: usize, radius: f64) -> DVector<f64> {
    let g = gvec(rng, len);
    let r = radius * rng.random::<f64>().powf(1.0 / len as f64);
    let norm = g.norm();
    g * (r / norm)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn dual_formulation_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = RngSeed(1).rng();
    for inst in 0..100 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=12);
        let data = gdata(&mut rng, n, m);
        let beta = gvec(&mut rng, m);
        let delta = rng.random_range(0.01..1.0);

        let linf = AttackBudget::new(delta, NormOrder::LInf).unwrap();
        let closed = adv_risk(&beta, &data, &linf).unwrap();
        let mut corners = 0.0;
        for i in 0..n {
            let xi = data.x().row(i);
            let mut best: f64 = 0.0;
            for mask in 0u32..(1 << m) {
                let pred: f64 = (0..m)
                    .map(|j| (xi[j] + if mask >> j & 1 == 1 { delta } else { -delta }) * beta[j])
                    .sum();
                best = best.max((data.y()[i] - pred).powi(2));
            }
            corners += best;
        }
        corners /= n as f64;
        check(rel(closed, corners) <= 1e-9, || {
            format!("instance {inst}: p=inf closed form {closed} vs corners {corners}")
        })?;

        let l2 = AttackBudget::new(delta, NormOrder::L2).unwrap();
        let closed = adv_risk(&beta, &data, &l2).unwrap();
        let r = data.residuals(&beta).unwrap();
        let mut inner = 0.0;
        for i in 0..n {
            let xi = data.x().row(i).transpose();
            let att = worst_case_attack(&beta, &xi, data.y()[i], &l2).unwrap();
            let mut best = att.attained_value.powi(2);
            for _ in 0..100_000 / n {
                let u = in_l2_ball(&mut rng, m, delta);
                best = best.max((r[i] - u.dot(&beta)).powi(2));
            }
            inner += best;
        }
        inner /= n as f64;
        check(rel(closed, inner) <= 1e-6, || {
            format!("instance {inst}: p=2 closed form {closed} vs sampled {inner}")
        })?;
    }
    within(Duration::from_secs(30), start)
}

fn closed_form_single_sample() -> Outcome {
    let start = Instant::now();
    let data = Dataset::from_rows(&[vec![3.0, 4.0]], &[5.0]).unwrap();
    let cfg = SolverConfig::default();
    let one = fit_adversarial(&data, &AttackBudget::new(1.0, NormOrder::L2).unwrap(), &cfg).unwrap();
    check(
        (one.beta[0] - 0.6).abs() <= 1e-5 && (one.beta[1] - 0.8).abs() <= 1e-5,
        || format!("delta=1 gave {:?}", one.beta),
    )?;
    let six = fit_adversarial(&data, &AttackBudget::new(6.0, NormOrder::L2).unwrap(), &cfg).unwrap();
    check(six.beta_vector().norm() <= 1e-7, || format!("delta=6 gave {:?}", six.beta))?;
    within(Duration::from_secs(1), start)
}

fn instances() -> Vec<Dataset> {
    (0..20)
        .map(|s| generate_isotropic(&IsotropicSpec::new(5, 20, RngSeed(s))).unwrap().data)
        .collect()
}

fn linf_interpolation_regime() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    for (s, data) in instances().iter().enumerate() {
        let g = gamma_min(data.x()).unwrap();
        let f = fit_adversarial(data, &AttackBudget::new(0.9 * g, NormOrder::LInf).unwrap(), &cfg).unwrap();
        let beta = f.beta_vector();
        let mse = data.residuals(&beta).unwrap().norm_squared() / data.n() as f64;
        let l1 = min_l1_interpolator(data, &cfg).unwrap();
        check(l1.converged, || format!("seed {s}: LP not certified: {l1:?}"))?;
        check(mse <= 1e-6, || format!("seed {s}: train mse {mse}"))?;
        let r = rel(beta.lp_norm(1), l1.objective);
        check(r <= 1e-4, || format!("seed {s}: l1 norm off by {r}"))?;
    }
    within(Duration::from_secs(60), start)
}

fn l2_interpolation_regime() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    for (s, data) in instances().iter().enumerate() {
        let g = interpolation_thresholds(data).unwrap().gamma_min_xqt;
        let f = fit_adversarial(data, &AttackBudget::new(0.9 * g, NormOrder::L2).unwrap(), &cfg).unwrap();
        let target = min_l2_interpolator(data).unwrap().beta_vector();
        let d = (f.beta_vector() - &target).norm() / target.norm();
        check(d <= 1e-4, || format!("seed {s}: relative distance {d}"))?;
    }
    within(Duration::from_secs(60), start)
}

fn abrupt_transition() -> Outcome {
    let cfg = SolverConfig::default();
    let mut failures = Vec::new();
    for seed in 100..105 {
        let spec = IsotropicSpec {
            r2: 4.0,
            sigma2: 1.0,
            ..IsotropicSpec::new(20, 60, RngSeed(seed))
        };
        let data = generate_isotropic(&spec).unwrap().data;
        let g = gamma_min(data.x()).unwrap();
        let mut grid = default_grid();
        grid.push(g);
        let adv = regularization_path(&data, Method::Adversarial, NormOrder::LInf, &grid, &cfg).unwrap();
        let t = detect_interpolation_transition(&adv, TRANSITION_TOL).unwrap();
        if t < 0.99 * g {
            failures.push(format!("seed {seed}: adversarial transition {t:.3e} < 0.99 gamma_min {g:.3e}"));
        }
        let lasso = regularization_path(&data, Method::Lasso, NormOrder::LInf, &grid, &cfg).unwrap();
        let at = lasso.iter().find(|r| r.delta == g).unwrap();
        if at.train_mse <= 1e-4 {
            failures.push(format!(
                "seed {seed}: lasso train mse {:.2e} <= 1e-4 at gamma_min {g:.2e}",
                at.train_mse
            ));
        }
    }
    check(failures.is_empty(), || failures.join("; "))
}

fn sparsity() -> Outcome {
    let cfg = SolverConfig::default();
    let raw = generate_isotropic(&IsotropicSpec::new(100, 10, RngSeed(7))).unwrap().data;
    let data = standardize(&raw).unwrap();
    let zero = data.x().transpose() * data.y();
    let zero = zero.amax() / data.y().lp_norm(1);
    check(rel(zero, adversarial_zero_threshold(&data, NormOrder::LInf)) <= 1e-14, || {
        "zero threshold disagrees with its formula".into()
    })?;
    let nnz = |delta: f64| -> Result<(usize, FitResult), String> {
        let b = AttackBudget::new(delta, NormOrder::LInf).unwrap();
        let f = fit_adversarial(&data, &b, &cfg).map_err(|e| e.to_string())?;
        Ok((f.beta.iter().filter(|v| v.abs() > 1e-8).count(), f))
    };
    let (k, _) = nnz(1e-6)?;
    check(k == 10, || format!("{k} nonzeros at delta=1e-6"))?;
    for factor in [1.0, 1.5, 10.0] {
        let (k, _) = nnz(factor * zero)?;
        check(k == 0, || format!("{k} nonzeros at {factor} x zero threshold"))?;
        let b = AttackBudget::new(factor * zero, NormOrder::LInf).unwrap();
        let res = adv_stationarity(&DVector::zeros(10), &data, &b, 1e-12).unwrap();
        check(res <= 1e-12, || format!("zero fails the subgradient check: {res}"))?;
    }
    let grid = log_grid(1e-6, 2.0 * zero, 50).unwrap();
    let mut prev = usize::MAX;
    for &d in &grid {
        let (k, f) = nnz(d)?;
        check(f.converged, || format!("fit at {d} not converged"))?;
        check(k <= prev, || format!("count rises to {k} at {d}"))?;
        if d >= zero {
            check(k == 0, || format!("{k} nonzeros at {d} >= zero threshold"))?;
        }
        prev = k;
    }
    Ok(())
}

fn featurewise_consistency() -> Outcome {
    let cfg = SolverConfig::default();
    let mut rng = RngSeed(7).rng();
    for inst in 0..10 {
        let (n, m) = (4, 3);
        let data = gdata(&mut rng, n, m);
        let delta = 0.2 + 0.05 * inst as f64;
        let f = fit_sqrt_lasso(&data, delta, &cfg).unwrap();
        let beta = f.beta_vector();
        let feat = robust_risk_featurewise(&beta, &data, delta).unwrap();
        check(f.objective == feat, || format!("instance {inst}: {} != {feat}", f.objective))?;
        let budget = AttackBudget::new(delta, NormOrder::L2).unwrap();
        let samp = robust_risk_samplewise(&beta, &data, &budget).unwrap();
        for _ in 0..100_000 {
            let cols: Vec<DVector<f64>> = (0..m).map(|_| in_l2_ball(&mut rng, n, delta)).collect();
            let by_col = (data.y() - (data.x() + DMatrix::from_columns(&cols)) * &beta).norm();
            check(by_col <= feat + 1e-9, || format!("instance {inst}: column attack {by_col} > {feat}"))?;
            let rows: Vec<DVector<f64>> = (0..n).map(|_| in_l2_ball(&mut rng, m, delta)).collect();
            let dx = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
            let by_row = (data.y() - (data.x() + dx) * &beta).norm();
            check(by_row <= samp + 1e-9, || format!("instance {inst}: row attack {by_row} > {samp}"))?;
        }
    }
    Ok(())
}

/// Independent optimality checks of one fit.
fn certify(data: &Dataset, spec: &EstimatorSpec, f: &FitResult, rng: &mut ChaCha8Rng) -> Outcome {
    let tol = spec.config.tolerance;
    let beta = f.beta_vector();
    let objective = |b: &DVector<f64>| -> f64 {
        match spec.kind {
            Method::Adversarial => adv_risk(b, data, &spec.budget.unwrap()).unwrap(),
            Method::SqrtLasso => robust_risk_featurewise(b, data, spec.delta).unwrap(),
            Method::Lasso => {
                data.residuals(b).unwrap().norm_squared() / data.n() as f64
                    + spec.delta * b.lp_norm(1)
            }
            _ => unreachable!(),
        }
    };
    let res = match spec.kind {
        Method::Adversarial => adv_stationarity(&beta, data, &spec.budget.unwrap(), 1e-9).unwrap(),
        Method::Lasso => lasso_kkt_residual(data, spec.delta, &beta),
        Method::SqrtLasso => sqrt_lasso_stationarity(&beta, data, spec.delta, 1e-9).unwrap(),
        Method::Ridge => {
            let r = ridge_system_residual(data, spec.delta, &beta);
            return check(r <= 1e-10, || format!("ridge system residual {r}"));
        }
        Method::MinL1Interp => {
            let feas = (data.x() * &beta - data.y()).amax();
            check(feas <= 1e-7, || format!("min-l1 infeasible by {feas}"))?;
            // no null-space direction lowers the l1 norm
            let q = advreg::thresholds::row_space_basis(data.x()).unwrap();
            let proj = DMatrix::identity(data.m(), data.m()) - q.transpose() * &q;
            for _ in 0..200 {
                let step = &proj * gvec(rng, data.m()) * 1e-3;
                let other = (&beta + step).lp_norm(1);
                check(other >= f.objective * (1.0 - 1e-9), || format!("null-space step lowers l1 to {other}"))?;
            }
            return check(f.optimality_residual <= tol, || "duality gap above tolerance".into());
        }
        _ => return Ok(()),
    };
    check(res <= tol, || format!("{:?} stationarity {res}", spec.kind))?;
    let at = objective(&beta);
    for k in 0..200 {
        let scale = [1e-6, 1e-3, 1e-1][k % 3] * (1.0 + beta.amax());
        let probe = &beta + gvec(rng, data.m()) * scale;
        let there = objective(&probe);
        check(at <= there * (1.0 + 1e-9) + 1e-15, || {
            format!("{:?}: probe improves {at} to {there}", spec.kind)
        })?;
    }
    Ok(())
}

fn solver_certificates() -> Outcome {
    let mut rng = RngSeed(8).rng();
    let mut certified = 0;
    for (n, m) in [(10, 4), (8, 8), (6, 20), (20, 60)] {
        let data = gdata(&mut rng, n, m);
        let mut specs = Vec::new();
        for delta in [1e-3, 1e-2, 1e-1, 1.0] {
            for p in [NormOrder::L2, NormOrder::LInf] {
                specs.push(EstimatorSpec::adversarial(AttackBudget::new(delta, p).unwrap()));
            }
            for kind in [Method::Lasso, Method::Ridge, Method::SqrtLasso] {
                specs.push(EstimatorSpec::penalized(kind, delta));
            }
        }
        if n < m {
            specs.push(EstimatorSpec::penalized(Method::MinL1Interp, 0.0));
        }
        for spec in &specs {
            let f = fit(&data, spec).map_err(|e| format!("{:?}: {e}", spec.kind))?;
            if !f.converged {
                eprintln!(
                    "not converged: n={n} m={m} {:?} delta={} residual={:.3e}",
                    spec.kind, spec.delta, f.optimality_residual
                );
            }
            if f.converged {
                certify(&data, spec, &f, &mut rng).map_err(|e| format!("n={n} m={m} delta={}: {e}", spec.delta))?;
                certified += 1;
            }
        }
    }
    check(certified > 0, || "no fit converged".into())?;
    for pair in 0..1000 {
        let p = if pair % 2 == 0 { NormOrder::L2 } else { NormOrder::LInf };
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=8);
        let data = gdata(&mut rng, n, m);
        let a = gvec(&mut rng, m);
        let b = gvec(&mut rng, m);
        let budget = AttackBudget::new(rng.random_range(0.0..1.0), p).unwrap();
        let g = adv_risk_subgradient(&a, &data, &budget).unwrap();
        let lhs = adv_risk(&b, &data, &budget).unwrap();
        let rhs = adv_risk(&a, &data, &budget).unwrap() + g.dot(&(&b - &a));
        check(lhs >= rhs - 1e-9, || format!("pair {pair}: {lhs} < {rhs}"))?;
    }
    Ok(())
}

fn estimator_oracles() -> Outcome {
    let cfg = SolverConfig::default();
    let mut rng = RngSeed(9).rng();
    for _ in 0..20 {
        let (n, m) = (rng.random_range(2..20), rng.random_range(1..20));
        let data = gdata(&mut rng, n, m);
        let delta = rng.random_range(1e-3..1.0);
        let x = data.x();
        let a = x.transpose() * x + DMatrix::identity(m, m) * (n as f64 * delta);
        let oracle = a.lu().solve(&(x.transpose() * data.y())).unwrap();
        let got = fit_ridge(&data, delta).unwrap().beta_vector();
        let r = (&got - &oracle).norm() / oracle.norm();
        check(r <= 1e-10, || format!("ridge off by {r}"))?;
    }
    for _ in 0..20 {
        let m = rng.random_range(1..8);
        let diag = DVector::from_fn(m, |_, _| rng.random_range(0.5..2.0));
        let y = gvec(&mut rng, m);
        let data = Dataset::new(DMatrix::from_diagonal(&diag), y.clone()).unwrap();
        let delta = rng.random_range(0.0..1.0);
        let f = fit_lasso(&data, delta, &cfg).unwrap();
        for j in 0..m {
            let t = m as f64 * delta / 2.0;
            let v = diag[j] * y[j];
            let oracle = v.signum() * (v.abs() - t).max(0.0) / (diag[j] * diag[j]);
            check((f.beta[j] - oracle).abs() <= 1e-8, || format!("lasso {} vs {oracle}", f.beta[j]))?;
        }
    }
    for inst in 0..20 {
        let data = gdata(&mut rng, 4, 8);
        let mut best = f64::INFINITY;
        for mask in 0u32..256 {
            if mask.count_ones() != 4 {
                continue;
            }
            let cols: Vec<usize> = (0..8).filter(|j| mask >> j & 1 == 1).collect();
            let sub = DMatrix::from_fn(4, 4, |i, a| data.x()[(i, cols[a])]);
            if let Some(b) = sub.lu().solve(data.y()) {
                best = best.min(b.lp_norm(1));
            }
        }
        let f = min_l1_interpolator(&data, &cfg).unwrap();
        check(rel(f.objective, best) <= 1e-5, || format!("instance {inst}: min-l1 {} vs {best}", f.objective))?;
    }
    Ok(())
}

fn advreg(dir: &Path, args: &[&str]) -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_advreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    let runs: [&[&str]; 6] = [
        &["gen", "--n", "20", "--m", "60", "--seed", "11", "--out", "d.csv"],
        &["gen", "--model", "latent", "--n", "15", "--m", "30", "--seed", "12", "--standardize", "--out", "l.csv"],
        &["path", "--data", "d.csv", "--method", "adv", "--grid-size", "40", "--out", "p.csv"],
        &["path", "--data", "l.csv", "--method", "lasso", "--grid-size", "40", "--out", "q.csv"],
        &["sweep", "--n", "15", "--n-test", "20", "--m-grid", "5,15,40", "--reps", "3", "--jobs", "3", "--out", "s.csv"],
        &["fit", "--data", "d.csv", "--method", "min-l1", "--out", "f.json"],
    ];
    for args in runs {
        advreg(p, args)?;
    }
    for out in ["d.csv", "l.csv", "p.csv", "q.csv", "s.csv", "f.json"] {
        let again = format!("replayed_{out}");
        advreg(p, &["replay", "--manifest", &format!("{out}.manifest.json"), "--out", &again])?;
        let a = fs::read(p.join(out)).map_err(|e| e.to_string())?;
        let b = fs::read(p.join(&again)).map_err(|e| e.to_string())?;
        check(a == b, || format!("{out} differs after replay"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("dual formulation equivalence", dual_formulation_equivalence),
        ("single-sample closed form", closed_form_single_sample),
        ("l_inf interpolation regime", linf_interpolation_regime),
        ("l2 interpolation regime", l2_interpolation_regime),
        ("abrupt transition", abrupt_transition),
        ("sparsity", sparsity),
        ("feature-wise robust risk", featurewise_consistency),
        ("solver certificates", solver_certificates),
        ("estimator oracles", estimator_oracles),
        ("reproducibility", reproducibility),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2} {name}: PASS ({secs:.2} s)", k + 1),
            Err(e) => {
                println!("criterion {:>2} {name}: FAIL ({secs:.2} s): {e}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
