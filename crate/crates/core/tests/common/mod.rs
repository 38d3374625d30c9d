#![allow(dead_code)]

use advreg::{Dataset, RngSeed};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    RngSeed(seed).rng()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| normal(rng))
}

pub fn gaussian_data(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset {
    let x = DMatrix::from_fn(n, m, |_, _| normal(rng));
    let y = gaussian_vector(rng, n);
    Dataset::new(x, y).unwrap()
}

/// Uniform point of the unit l2 ball in `len` dimensions.
pub fn in_l2_ball(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    let g = gaussian_vector(rng, len);
    let radius: f64 = rng.random::<f64>().powf(1.0 / len as f64);
    let norm = g.norm();
    g * (radius / norm)
}

/// Uniform point of the unit l_inf ball.
pub fn in_box(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..=1.0))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
