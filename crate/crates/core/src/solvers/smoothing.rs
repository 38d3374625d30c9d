//! First-order fallback for adversarial training: replace `|r|` by
//! `sqrt(r^2 + eps^2)` and the norm by a smooth surrogate, then run
//! accelerated gradient descent with backtracking while `eps` decreases
//! along the configured schedule.
//!
//! Much slower and less accurate than the conic solver; kept as an
//! independent restart to cross-check its objective values.

use nalgebra::DVector;

use crate::error::Result;
use crate::objective::{adv_risk, adv_stationarity};
use crate::types::{AttackBudget, Dataset, FitResult, Method, NormOrder, SolverConfig};

struct Smoothed<'a> {
    data: &'a Dataset,
    delta: f64,
    p: NormOrder,
    eps: f64,
}

impl Smoothed<'_> {
    fn norm_and_grad(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let eps = self.eps;
        match self.p {
            NormOrder::L2 => {
                let s = (beta.norm_squared() + eps * eps).sqrt();
                (s - eps, beta / s)
            }
            NormOrder::LInf => {
                let roots = beta.map(|b| (b * b + eps * eps).sqrt());
                let value = roots.sum() - beta.len() as f64 * eps;
                (value, beta.component_div(&roots))
            }
        }
    }

    fn value(&self, beta: &DVector<f64>) -> f64 {
        let r = self.data.y() - self.data.x() * beta;
        let (nb, _) = self.norm_and_grad(beta);
        let eps2 = self.eps * self.eps;
        r.iter()
            .map(|ri| ((ri * ri + eps2).sqrt() + self.delta * nb).powi(2))
            .sum::<f64>()
            / self.data.n() as f64
    }

    fn value_and_gradient(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.data.n() as f64;
        let r = self.data.y() - self.data.x() * beta;
        let (nb, gn) = self.norm_and_grad(beta);
        let eps2 = self.eps * self.eps;
        let mut total_h = 0.0;
        let mut value = 0.0;
        let w = DVector::from_iterator(
            r.len(),
            r.iter().map(|&ri| {
                let a = (ri * ri + eps2).sqrt();
                let h = a + self.delta * nb;
                total_h += h;
                value += h * h;
                h * ri / a
            }),
        );
        let grad = (-(self.data.x().transpose() * w) + gn * (self.delta * total_h)) * (2.0 / n);
        (value / n, grad)
    }
}

/// Adversarial training by smoothing and continuation.
pub fn fit_adversarial_smoothed(
    data: &Dataset,
    budget: &AttackBudget,
    config: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<FitResult> {
    config.validate()?;
    let schedule = config.smoothing;
    let mut beta = match warm {
        Some(w) => {
            data.check_beta(w)?;
            w.clone()
        }
        None => DVector::zeros(data.m()),
    };
    let mut stages = Vec::new();
    let mut eps = schedule.initial;
    while eps > schedule.final_eps * (1.0 + 1e-12) {
        stages.push(eps);
        eps *= schedule.decay;
    }
    stages.push(schedule.final_eps);
    let per_stage = (config.max_iterations / stages.len()).max(1);

    let mut lipschitz: f64 = 1.0;
    let mut iterations = 0;
    for eps in stages {
        let f = Smoothed {
            data,
            delta: budget.delta(),
            p: budget.p(),
            eps,
        };
        let mut prev = beta.clone();
        let mut momentum: f64 = 1.0;
        let mut current = f.value(&beta);
        for _ in 0..per_stage {
            iterations += 1;
            let t_next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let z = &beta + (&beta - &prev) * ((momentum - 1.0) / t_next);
            let (fz, gz) = f.value_and_gradient(&z);
            let g2 = gz.norm_squared();
            if g2 == 0.0 {
                break;
            }
            let next = loop {
                let cand = &z - &gz * (1.0 / lipschitz);
                let fc = f.value(&cand);
                if fc <= fz - 0.5 * g2 / lipschitz || lipschitz > 1e300 {
                    break cand;
                }
                lipschitz *= 2.0;
            };
            let fnext = f.value(&next);
            prev = std::mem::replace(&mut beta, next);
            momentum = t_next;
            if fnext > current {
                // adaptive restart
                momentum = 1.0;
            }
            let change = (current - fnext).abs();
            current = fnext;
            lipschitz *= 0.9;
            if change <= 1e-16 * current.max(1e-300) && (&beta - &prev).amax() <= 1e-15 * beta.amax().max(1e-300) {
                break;
            }
        }
    }
    let residual = adv_stationarity(&beta, data, budget, 1e-6)?;
    Ok(FitResult {
        objective: adv_risk(&beta, data, budget)?,
        beta: beta.as_slice().to_vec(),
        iterations,
        converged: residual <= config.tolerance,
        optimality_residual: residual,
        method: Method::Adversarial,
    })
}
