//! Feature-count sweeps: train and test error of several estimators as the
//! number of features grows at fixed `n`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{sample_isotropic, IsotropicSpec, LatentTruth};
use super::metrics::{metrics, quantile, Metrics};
use crate::error::{Error, Result};
use crate::solvers::{fit, EstimatorSpec};
use crate::types::{AttackBudget, Dataset, Method, NormOrder, RngSeed, SolverConfig};

pub const DEFAULT_SWEEP_DELTAS: [f64; 4] = [0.5, 0.1, 0.05, 0.01];
pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_TEST_SIZE: usize = 100;

/// Data model of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SweepData {
    Isotropic { r2: f64, sigma2: f64 },
    Latent { d: usize, sigma_xi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEstimator {
    pub kind: Method,
    /// Attack norm; only read for adversarial training.
    pub p: NormOrder,
}

impl SweepEstimator {
    pub fn new(kind: Method, p: NormOrder) -> Self {
        SweepEstimator { kind, p }
    }

    pub fn label(&self) -> String {
        match (self.kind, self.p) {
            (Method::Adversarial, NormOrder::LInf) => "adv_linf".into(),
            (Method::Adversarial, NormOrder::L2) => "adv_l2".into(),
            (Method::MinL1Interp, _) => "min_l1".into(),
            (Method::MinL2Interp, _) => "min_l2".into(),
            (kind, _) => kind.as_str().into(),
        }
    }

    /// Whether the estimator depends on `delta` at all.
    pub fn uses_delta(&self) -> bool {
        matches!(
            self.kind,
            Method::Adversarial | Method::Lasso | Method::Ridge | Method::SqrtLasso
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub data: SweepData,
    pub n: usize,
    pub n_test: usize,
    /// Ascending.
    pub m_grid: Vec<usize>,
    pub deltas: Vec<f64>,
    pub repetitions: usize,
    pub estimators: Vec<SweepEstimator>,
    pub seed: RngSeed,
    pub config: SolverConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_test == 0 || self.repetitions == 0 {
            return Err(Error::InvalidParameter(
                "n, n_test and repetitions must be positive".into(),
            ));
        }
        if self.m_grid.is_empty() || self.estimators.is_empty() || self.deltas.is_empty() {
            return Err(Error::Empty("sweep needs features, deltas and estimators".into()));
        }
        if self.m_grid.contains(&0) || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "m grid must be positive and strictly ascending".into(),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidParameter(format!("invalid delta {d}")));
        }
        self.config.validate()
    }
}

/// Median and quartiles over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Summary {
            median: quantile(values, 0.5),
            q25: quantile(values, 0.25),
            q75: quantile(values, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub m: usize,
    /// Zero for estimators without a regularization parameter.
    pub delta: f64,
    pub estimator: String,
    /// `None` when every repetition failed.
    pub train_mse: Option<Summary>,
    pub test_mse: Option<Summary>,
    pub l2_norm: Option<Summary>,
    /// Repetitions that produced a fit; the summaries are over these.
    pub successes: usize,
    /// Fits that returned an error.
    pub failures: usize,
    /// Fits that returned without meeting their optimality tolerance.
    pub nonconverged: usize,
}

type CellOutcome = Result<(Metrics, bool)>;

/// Training and test sets of one `(m, repetition)` job. Train and test
/// share `beta*` (or the latent truth) and use independent samples.
pub fn sweep_datasets(spec: &SweepSpec, m: usize, rep: usize) -> Result<(Dataset, Dataset)> {
    let seed = spec.seed.derive(&[m as u64, rep as u64]);
    match spec.data {
        SweepData::Isotropic { r2, sigma2 } => {
            let train = IsotropicSpec {
                n: spec.n,
                m,
                r2,
                sigma2,
                beta_star_seed: seed.derive(&[0]),
                noise_seed: seed.derive(&[1]),
            };
            let beta_star = train.beta_star();
            let test = IsotropicSpec {
                n: spec.n_test,
                noise_seed: seed.derive(&[2]),
                ..train
            };
            Ok((sample_isotropic(&train, &beta_star)?, sample_isotropic(&test, &beta_star)?))
        }
        SweepData::Latent { d, sigma_xi } => {
            let truth = LatentTruth::draw(m, d, seed.derive(&[0]))?;
            Ok((
                truth.sample(spec.n, sigma_xi, 1.0, seed.derive(&[1]))?,
                truth.sample(spec.n_test, sigma_xi, 1.0, seed.derive(&[2]))?,
            ))
        }
    }
}

fn estimator_deltas(spec: &SweepSpec, est: &SweepEstimator) -> Vec<f64> {
    if est.uses_delta() {
        spec.deltas.clone()
    } else {
        vec![0.0]
    }
}

fn run_cell(spec: &SweepSpec, est: &SweepEstimator, delta: f64, train: &Dataset, test: &Dataset) -> CellOutcome {
    let estimator = EstimatorSpec {
        kind: est.kind,
        budget: Some(AttackBudget::new(delta, est.p)?),
        delta,
        config: spec.config,
    };
    let result = fit(train, &estimator)?;
    let beta = DVector::from_vec(result.beta);
    Ok((metrics(&beta, train, test)?, result.converged))
}

fn run_job(spec: &SweepSpec, m: usize, rep: usize) -> Vec<CellOutcome> {
    let cells: usize = spec.estimators.iter().map(|e| estimator_deltas(spec, e).len()).sum();
    let (train, test) = match sweep_datasets(spec, m, rep) {
        Ok(sets) => sets,
        Err(e) => return (0..cells).map(|_| Err(e.clone())).collect(),
    };
    let mut out = Vec::with_capacity(cells);
    for est in &spec.estimators {
        for delta in estimator_deltas(spec, est) {
            out.push(run_cell(spec, est, delta, &train, &test));
        }
    }
    out
}

/// Runs every `(m, repetition)` job, in parallel on the current rayon
/// pool, and summarizes each `(m, estimator, delta)` cell. Errors of
/// individual fits are counted, never propagated.
pub fn feature_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .m_grid
        .iter()
        .flat_map(|&m| (0..spec.repetitions).map(move |rep| (m, rep)))
        .collect();
    let results: Vec<Vec<CellOutcome>> = jobs.par_iter().map(|&(m, rep)| run_job(spec, m, rep)).collect();

    let mut records = Vec::new();
    for (mi, &m) in spec.m_grid.iter().enumerate() {
        let reps = &results[mi * spec.repetitions..(mi + 1) * spec.repetitions];
        let mut cell = 0;
        for est in &spec.estimators {
            for delta in estimator_deltas(spec, est) {
                let mut ok = Vec::new();
                let mut failures = 0;
                let mut nonconverged = 0;
                for rep in reps {
                    match &rep[cell] {
                        Ok((metrics, converged)) => {
                            ok.push(*metrics);
                            if !converged {
                                nonconverged += 1;
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
                let column = |f: fn(&Metrics) -> f64| -> Option<Summary> {
                    (!ok.is_empty()).then(|| Summary::of(&ok.iter().map(f).collect::<Vec<_>>()))
                };
                records.push(SweepRecord {
                    m,
                    delta,
                    estimator: est.label(),
                    train_mse: column(|x| x.train_mse),
                    test_mse: column(|x| x.test_mse),
                    l2_norm: column(|x| x.l2_norm),
                    successes: ok.len(),
                    failures,
                    nonconverged,
                });
                cell += 1;
            }
        }
    }
    Ok(records)
}
