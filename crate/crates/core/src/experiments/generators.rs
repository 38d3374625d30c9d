//! Synthetic regression data: isotropic Gaussian features, and a latent
//! factor model with a fixed signal-to-noise ratio across `m`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, RngSeed};

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, sd: f64) -> DMatrix<f64> {
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

fn gaussian_vector<R: Rng>(rng: &mut R, len: usize, sd: f64) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| sd * rng.sample::<f64, _>(StandardNormal)))
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidParameter(format!("{name} must be positive")));
    }
    Ok(())
}

fn check_variance(name: &str, v: f64, strict: bool) -> Result<()> {
    if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a finite {} number, got {v}",
            if strict { "positive" } else { "nonnegative" }
        )));
    }
    Ok(())
}

/// `x_i ~ N(0, r2 I_m)`, `y_i = x_i'beta* + e_i`, `e_i ~ N(0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicSpec {
    pub n: usize,
    pub m: usize,
    pub r2: f64,
    pub sigma2: f64,
    /// Draws `beta* ~ N(0, I_m / m)`.
    pub beta_star_seed: RngSeed,
    /// Draws the features and the noise.
    pub noise_seed: RngSeed,
}

impl IsotropicSpec {
    pub fn new(n: usize, m: usize, seed: RngSeed) -> Self {
        IsotropicSpec {
            n,
            m,
            r2: 4.0,
            sigma2: 1.0,
            beta_star_seed: seed.derive(&[0]),
            noise_seed: seed.derive(&[1]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("n", self.n)?;
        check_positive("m", self.m)?;
        check_variance("r2", self.r2, true)?;
        check_variance("sigma2", self.sigma2, false)
    }

    pub fn beta_star(&self) -> DVector<f64> {
        let mut rng = self.beta_star_seed.rng();
        gaussian_vector(&mut rng, self.m, (1.0 / self.m as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicData {
    pub data: Dataset,
    pub beta_star: DVector<f64>,
}

pub fn generate_isotropic(spec: &IsotropicSpec) -> Result<IsotropicData> {
    spec.validate()?;
    let beta_star = spec.beta_star();
    let data = sample_isotropic(spec, &beta_star)?;
    Ok(IsotropicData { data, beta_star })
}

/// Samples features and noise from `spec.noise_seed` around a given `beta*`.
pub fn sample_isotropic(spec: &IsotropicSpec, beta_star: &DVector<f64>) -> Result<Dataset> {
    spec.validate()?;
    if beta_star.len() != spec.m {
        return Err(Error::DimensionMismatch(format!(
            "beta* has {} entries, expected {}",
            beta_star.len(),
            spec.m
        )));
    }
    let mut rng = spec.noise_seed.rng();
    let x = gaussian_matrix(&mut rng, spec.n, spec.m, spec.r2.sqrt());
    let noise = gaussian_vector(&mut rng, spec.n, spec.sigma2.sqrt());
    let y = &x * beta_star + noise;
    Dataset::new(x, y)
}

/// `x = W z + u`, `y = theta'z + xi` with `W'W = (m/d) I_d`,
/// `z ~ N(0, I_d)`, `u ~ N(0, I_m)`, `xi ~ N(0, sigma_xi^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub sigma_xi: f64,
    pub seed: RngSeed,
}

impl LatentSpec {
    pub fn new(n: usize, m: usize, seed: RngSeed) -> Self {
        LatentSpec {
            n,
            m,
            d: 20,
            sigma_xi: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("n", self.n)?;
        check_positive("m", self.m)?;
        check_positive("d", self.d)?;
        check_variance("sigma_xi", self.sigma_xi, false)?;
        if self.m < self.d {
            return Err(Error::InvalidParameter(format!(
                "latent dimension d = {} exceeds m = {}",
                self.d, self.m
            )));
        }
        Ok(())
    }
}

/// Parameters shared by training and test samples of the latent model.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTruth {
    /// `m x d`
    pub w: DMatrix<f64>,
    /// Drawn `N(0, I_d / d)`.
    pub theta: DVector<f64>,
}

impl LatentTruth {
    pub fn draw(m: usize, d: usize, seed: RngSeed) -> Result<Self> {
        if d == 0 || m < d {
            return Err(Error::InvalidParameter(format!(
                "latent model needs 0 < d <= m, got d = {d}, m = {m}"
            )));
        }
        let mut rng = seed.rng();
        let g = gaussian_matrix(&mut rng, m, d, 1.0);
        let q = g.qr().q();
        let w = q.columns(0, d).into_owned() * (m as f64 / d as f64).sqrt();
        let theta = gaussian_vector(&mut rng, d, (1.0 / d as f64).sqrt());
        Ok(LatentTruth { w, theta })
    }

    /// `n` samples; `feature_noise` scales `u` (1 in the model proper).
    pub fn sample(
        &self,
        n: usize,
        sigma_xi: f64,
        feature_noise: f64,
        seed: RngSeed,
    ) -> Result<Dataset> {
        let (m, d) = self.w.shape();
        let mut rng = seed.rng();
        let z = gaussian_matrix(&mut rng, n, d, 1.0);
        let u = gaussian_matrix(&mut rng, n, m, feature_noise);
        let xi = gaussian_vector(&mut rng, n, sigma_xi);
        let x = &z * self.w.transpose() + u;
        let y = &z * &self.theta + xi;
        Dataset::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentData {
    pub data: Dataset,
    pub truth: LatentTruth,
}

/// Truth from `seed.derive([0])`, samples from `seed.derive([1])`.
pub fn generate_latent(spec: &LatentSpec) -> Result<LatentData> {
    spec.validate()?;
    let truth = LatentTruth::draw(spec.m, spec.d, spec.seed.derive(&[0]))?;
    let data = truth.sample(spec.n, spec.sigma_xi, 1.0, spec.seed.derive(&[1]))?;
    Ok(LatentData { data, truth })
}

/// Centers every column and the response, and scales columns to unit
/// (population) standard deviation. Constant columns are left at zero.
pub fn standardize(data: &Dataset) -> Result<Dataset> {
    let mut x = data.x().clone();
    let n = data.n() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        if sd > 0.0 {
            col /= sd;
        }
    }
    let y = data.y().add_scalar(-data.y().mean());
    Dataset::new(x, y)
}
