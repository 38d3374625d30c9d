//! Synthetic experiments: data generators, regularization paths, feature
//! sweeps and their metrics.

mod generators;
mod metrics;
mod path;
mod sweep;

pub use generators::{
    generate_isotropic, generate_latent, sample_isotropic, IsotropicData, IsotropicSpec,
    LatentData, LatentSpec, LatentTruth, standardize,
};
pub use metrics::{metrics, mse, nonzero_count, quantile, Metrics, NONZERO_TOL};
pub use path::{
    default_grid, detect_interpolation_transition, log_grid, regularization_path, PathRecord,
    DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_SIZE, TRANSITION_TOL,
};
pub use sweep::{
    feature_sweep, sweep_datasets, Summary, SweepData, SweepEstimator, SweepRecord, SweepSpec,
    DEFAULT_REPETITIONS, DEFAULT_SWEEP_DELTAS, DEFAULT_TEST_SIZE,
};
