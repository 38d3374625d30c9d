//! Domain types shared by every estimator: datasets, attack budgets, solver
//! configuration and fit results.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for every iterative solver.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Default iteration cap for every iterative solver.
pub const DEFAULT_MAX_ITERATIONS: usize = 200_000;

/// A validated regression dataset. Samples are rows of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validates a design matrix and response vector.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 || y.is_empty() {
            return Err(Error::Empty(format!(
                "design is {}x{}, response has length {}",
                x.nrows(),
                x.ncols(),
                y.len()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but response has length {}",
                x.nrows(),
                y.len()
            )));
        }
        // nalgebra is column-major; report the row-major position.
        if let Some((i, j)) = (0..x.nrows())
            .flat_map(|i| (0..x.ncols()).map(move |j| (i, j)))
            .find(|&(i, j)| !x[(i, j)].is_finite())
        {
            return Err(Error::NonFinite {
                what: "design matrix",
                index: i * x.ncols() + j,
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "response",
                index: i,
            });
        }
        Ok(Dataset { x, y })
    }

    /// Builds a dataset from row slices, mostly for tests and small examples.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {m}",
                rows[bad].len()
            )));
        }
        let x = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        Dataset::new(x, DVector::from_column_slice(y))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features.
    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.x, self.y)
    }

    /// Residual vector `y - X beta`.
    pub fn residuals(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_beta(beta)?;
        Ok(&self.y - &self.x * beta)
    }

    pub(crate) fn check_beta(&self, beta: &DVector<f64>) -> Result<()> {
        if beta.len() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {} but the design has {} features",
                beta.len(),
                self.m()
            )));
        }
        Ok(())
    }
}

/// Equivalent of [`Dataset::new`] taking raw nested rows.
pub fn validate_dataset(raw_x: &[Vec<f64>], raw_y: &[f64]) -> Result<Dataset> {
    Dataset::from_rows(raw_x, raw_y)
}

/// Norm order of the per-sample perturbation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormOrder {
    /// Euclidean ball; conjugate norm is also l2.
    L2,
    /// Box; conjugate norm is l1.
    LInf,
}

impl NormOrder {
    /// The conjugate order q with 1/p + 1/q = 1, as an exponent.
    pub fn conjugate_exponent(self) -> f64 {
        match self {
            NormOrder::L2 => 2.0,
            NormOrder::LInf => 1.0,
        }
    }

    /// The order p itself, as an exponent.
    pub fn exponent(self) -> f64 {
        match self {
            NormOrder::L2 => 2.0,
            NormOrder::LInf => f64::INFINITY,
        }
    }

    /// Evaluates the conjugate norm `||v||_q`.
    pub fn dual_norm(self, v: &DVector<f64>) -> f64 {
        match self {
            NormOrder::L2 => v.norm(),
            NormOrder::LInf => v.lp_norm(1),
        }
    }

    /// Evaluates the primal norm `||v||_p`.
    pub fn norm(self, v: &DVector<f64>) -> f64 {
        match self {
            NormOrder::L2 => v.norm(),
            NormOrder::LInf => v.amax(),
        }
    }
}

impl std::fmt::Display for NormOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormOrder::L2 => write!(f, "2"),
            NormOrder::LInf => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" | "l2" => Ok(NormOrder::L2),
            "inf" | "infinity" | "linf" => Ok(NormOrder::LInf),
            other => Err(Error::InvalidParameter(format!(
                "unsupported norm order {other:?}; expected 2 or inf"
            ))),
        }
    }
}

/// Perturbation radius and norm order of an adversary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackBudget {
    delta: f64,
    p: NormOrder,
}

impl AttackBudget {
    pub fn new(delta: f64, p: NormOrder) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "attack radius must be finite and nonnegative, got {delta}"
            )));
        }
        Ok(AttackBudget { delta, p })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> NormOrder {
        self.p
    }

    /// Same norm order, different radius.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        AttackBudget::new(delta, self.p)
    }
}

/// Continuation schedule for smoothing parameters used by first-order
/// fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSchedule {
    pub initial: f64,
    pub decay: f64,
    pub final_eps: f64,
}

impl Default for SmoothingSchedule {
    fn default() -> Self {
        SmoothingSchedule {
            initial: 1e-2,
            decay: 0.1,
            final_eps: 1e-10,
        }
    }
}

/// Iteration and accuracy settings common to every iterative estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub smoothing: SmoothingSchedule,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            smoothing: SmoothingSchedule::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        let s = &self.smoothing;
        if !(s.final_eps > 0.0 && s.initial >= s.final_eps) {
            return Err(Error::InvalidParameter(format!(
                "smoothing schedule needs initial >= final > 0, got {} and {}",
                s.initial, s.final_eps
            )));
        }
        if !(s.decay > 0.0 && s.decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing decay must lie in (0, 1), got {}",
                s.decay
            )));
        }
        Ok(())
    }
}

/// Which estimator produced a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adversarial,
    Lasso,
    Ridge,
    SqrtLasso,
    Ols,
    MinL1Interp,
    MinL2Interp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Adversarial => "adversarial",
            Method::Lasso => "lasso",
            Method::Ridge => "ridge",
            Method::SqrtLasso => "sqrt_lasso",
            Method::Ols => "ols",
            Method::MinL1Interp => "min_l1_interp",
            Method::MinL2Interp => "min_l2_interp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// Training objective of the estimator at `beta`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Solver-specific relative stationarity (or duality-gap) measure.
    pub optimality_residual: f64,
    pub method: Method,
}

impl FitResult {
    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }
}

/// Seed for every random generator in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// A ChaCha stream; identical seeds give bit-identical streams.
    pub fn rng(self) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Derives an independent child seed from a list of labels.
    pub fn derive(self, labels: &[u64]) -> RngSeed {
        let mut state = splitmix64(self.0 ^ 0x243F_6A88_85A3_08D3);
        for &label in labels {
            state = splitmix64(state ^ splitmix64(label));
        }
        RngSeed(state)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
