#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spectral_fic::periodogram::TimeSeries;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_series(rng: &mut ChaCha8Rng, n: usize) -> TimeSeries {
    TimeSeries::new(
        (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
    .unwrap()
}

/// Stationary AR(1) by direct recursion, independent of the library sampler.
pub fn ar1_recursion(rng: &mut ChaCha8Rng, rho: f64, sigma: f64, n: usize) -> TimeSeries {
    let mut y = Vec::with_capacity(n);
    let mut prev = sigma / (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal);
    y.push(prev);
    for _ in 1..n {
        prev = rho * prev + sigma * rng.sample::<f64, _>(StandardNormal);
        y.push(prev);
    }
    TimeSeries::new(y).unwrap()
}

/// (1/n) Σ y_t y_{t+k} computed directly.
pub fn lag_sum(y: &[f64], k: usize) -> f64 {
    let n = y.len();
    (0..n.saturating_sub(k))
        .map(|t| y[t] * y[t + k])
        .sum::<f64>()
        / n as f64
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}
