//! Command-line arguments. Every argument struct is also the resolved
//! configuration stored in run manifests.

use std::path::PathBuf;

use advreg::experiments::{
    SweepEstimator, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_SIZE,
};
use advreg::{Method, NormOrder, SolverConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "advreg", version, about = "Adversarial training for linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Fit one estimator and write its coefficients and diagnostics (JSON).
    Fit(FitArgs),
    /// Fit an estimator over a grid of regularization values (CSV).
    Path(PathArgs),
    /// Interpolation thresholds of a dataset (JSON).
    Thresholds(ThresholdsArgs),
    /// Generate a synthetic dataset (CSV).
    Gen(GenArgs),
    /// Train/test error as the number of features grows (CSV).
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Adv,
    Lasso,
    Ridge,
    SqrtLasso,
    Ols,
    MinL1,
    MinL2,
}

impl MethodArg {
    pub fn method(self) -> Method {
        match self {
            MethodArg::Adv => Method::Adversarial,
            MethodArg::Lasso => Method::Lasso,
            MethodArg::Ridge => Method::Ridge,
            MethodArg::SqrtLasso => Method::SqrtLasso,
            MethodArg::Ols => Method::Ols,
            MethodArg::MinL1 => Method::MinL1Interp,
            MethodArg::MinL2 => Method::MinL2Interp,
        }
    }

    pub fn needs_delta(self) -> bool {
        matches!(
            self,
            MethodArg::Adv | MethodArg::Lasso | MethodArg::Ridge | MethodArg::SqrtLasso
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum PArg {
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "inf")]
    #[serde(rename = "inf")]
    Inf,
}

impl PArg {
    pub fn norm(self) -> NormOrder {
        match self {
            PArg::Two => NormOrder::L2,
            PArg::Inf => NormOrder::LInf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    AdvInf,
    #[value(name = "adv-2")]
    #[serde(rename = "adv-2")]
    Adv2,
    Lasso,
    Ridge,
    SqrtLasso,
    Ols,
    MinL1,
    MinL2,
}

impl EstimatorArg {
    pub fn estimator(self) -> SweepEstimator {
        let (kind, p) = match self {
            EstimatorArg::AdvInf => (Method::Adversarial, NormOrder::LInf),
            EstimatorArg::Adv2 => (Method::Adversarial, NormOrder::L2),
            EstimatorArg::Lasso => (Method::Lasso, NormOrder::LInf),
            EstimatorArg::Ridge => (Method::Ridge, NormOrder::L2),
            EstimatorArg::SqrtLasso => (Method::SqrtLasso, NormOrder::LInf),
            EstimatorArg::Ols => (Method::Ols, NormOrder::L2),
            EstimatorArg::MinL1 => (Method::MinL1Interp, NormOrder::LInf),
            EstimatorArg::MinL2 => (Method::MinL2Interp, NormOrder::L2),
        };
        SweepEstimator::new(kind, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Isotropic,
    Latent,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column; all other columns are features.
    #[arg(long, default_value = "y")]
    pub target_col: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Optimality tolerance of iterative solvers.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iter,
            tolerance: self.tol,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Attack norm of adversarial training.
    #[arg(long, value_enum, default_value = "inf")]
    pub p: PArg,
    /// Attack radius or penalty; required by adv, lasso, ridge, sqrt-lasso.
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Attack norm of adversarial training and of the adv_objective column.
    #[arg(long, value_enum, default_value = "inf")]
    pub p: PArg,
    #[arg(long, default_value_t = DEFAULT_GRID_MIN)]
    pub grid_min: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_MAX)]
    pub grid_max: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Explicit grid, comma separated; replaces the log-spaced grid.
    #[arg(long, value_delimiter = ',', alias = "delta")]
    pub deltas: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "isotropic")]
    pub model: ModelArg,
    /// Feature variance (isotropic model).
    #[arg(long, default_value_t = 4.0)]
    pub r2: f64,
    /// Noise variance (isotropic model).
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Latent dimension (latent model).
    #[arg(long, default_value_t = 20)]
    pub d: usize,
    /// Response noise standard deviation (latent model).
    #[arg(long, default_value_t = 0.1)]
    pub sigma_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Center all columns and scale features to unit variance.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = advreg::experiments::DEFAULT_TEST_SIZE)]
    pub n_test: usize,
    /// Feature counts, ascending, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,200")]
    pub m_grid: Vec<usize>,
    /// Regularization values, comma separated.
    #[arg(long, value_delimiter = ',', alias = "delta", default_value = "0.5,0.1,0.05,0.01")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = advreg::experiments::DEFAULT_REPETITIONS)]
    pub reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "adv-inf,adv-2,lasso,ridge")]
    pub estimators: Vec<EstimatorArg>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
