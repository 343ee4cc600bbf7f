//! Seeded synthetic trajectories for tests and benchmarks.
//!
//! Each family draws its parameters from a ChaCha8 stream seeded with the
//! given seed, so a seed identifies one series exactly.

use rand::Rng;

use crate::dynamics::{exponential_solution, logistic_closed_form, LogisticParams, DEFAULT_EPSILON};
use crate::noise::{self, add_relative_noise};
use crate::series::TimeSeries;

/// Noise stream offset so parameter and noise draws never share a seed.
const NOISE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub series: TimeSeries<f64>,
    pub affinity: f64,
    pub y0: f64,
    /// `None` for the exponential family.
    pub delta_e: Option<f64>,
}

/// Logistic curve whose inflection falls between 30% and 60% of the window.
///
/// `A` in `[0.5, 2]`, `dE` in `[1, 10]`, `y0 = 0.01 dE`, 50 to 200 samples.
pub fn logistic_family(seed: u64) -> Synthetic {
    let mut r = noise::rng(seed);
    let affinity = r.random_range(0.5..2.0);
    let delta_e = r.random_range(1.0..10.0);
    let at = r.random_range(0.3..0.6);
    let n = r.random_range(50..=200);
    let p = LogisticParams::with_offset(affinity, delta_e, DEFAULT_EPSILON).expect("valid");
    let t_end = p.inflection_time() / at;
    let series = TimeSeries::sample(0.0, t_end, n, |t| logistic_closed_form(t, &p)).expect("valid");
    Synthetic {
        series,
        affinity,
        y0: p.y0,
        delta_e: Some(delta_e),
    }
}

/// Exponential growth over `[0, 10]` with `A` in `[0.4, 0.8]`,
/// `y0` in `[0.05, 2]`, 50 to 200 samples.
pub fn exponential_family(seed: u64) -> Synthetic {
    let mut r = noise::rng(seed);
    let affinity = r.random_range(0.4..0.8);
    let y0 = r.random_range(0.05..2.0);
    let n = r.random_range(50..=200);
    let series =
        TimeSeries::sample(0.0, 10.0, n, |t| exponential_solution(t, affinity, y0)).expect("valid");
    Synthetic {
        series,
        affinity,
        y0,
        delta_e: None,
    }
}

/// Multiplies every sample by `1 + sigma z` with seeded standard normals.
pub fn with_relative_noise(s: &Synthetic, sigma: f64, seed: u64) -> Synthetic {
    Synthetic {
        series: add_relative_noise(&s.series, sigma, seed ^ NOISE_SALT).expect("finite"),
        ..s.clone()
    }
}
