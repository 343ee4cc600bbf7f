//! Seeded Gaussian noise for synthetic test data.
//!
//! The generator is fixed: ChaCha8 seeded through `SeedableRng::seed_from_u64`
//! (`rand_chacha` 0.9), with standard normal deviates drawn by `rand_distr`'s
//! ziggurat sampler. One deviate is consumed per sample, in time order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;
use crate::series::{SeriesError, TimeSeries};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` standard normal deviates.
pub fn standard_normals(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
}

/// `y + sigma * z`.
pub fn add_gaussian_noise<T: Scalar>(
    series: &TimeSeries<T>,
    sigma: T,
    seed: u64,
) -> Result<TimeSeries<T>, SeriesError> {
    let z = standard_normals(seed, series.len());
    let y = series
        .values()
        .iter()
        .zip(&z)
        .map(|(&y, &z)| y + sigma * T::lit(z))
        .collect();
    TimeSeries::new(series.times().to_vec(), y)
}

/// `y * (1 + sigma * z)`: noise proportional to the local value.
pub fn add_relative_noise<T: Scalar>(
    series: &TimeSeries<T>,
    sigma: T,
    seed: u64,
) -> Result<TimeSeries<T>, SeriesError> {
    let z = standard_normals(seed, series.len());
    let y = series
        .values()
        .iter()
        .zip(&z)
        .map(|(&y, &z)| y * (T::one() + sigma * T::lit(z)))
        .collect();
    TimeSeries::new(series.times().to_vec(), y)
}

/// Uniform `[0, 1)` draws, for synthetic columns.
pub fn uniforms(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>()).collect()
}
