//! Trial fan-out with order-deterministic reduction.
//!
//! Trials run on whatever rayon pool is current; results are collected in
//! trial order and every reduction happens sequentially over that order, so
//! outputs do not depend on the number of workers.

use rayon::prelude::*;

pub(crate) fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Sample mean and standard error of the mean (`sd / sqrt(len)`, with the
/// `len - 1` variance normalization).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

/// Standard error of a binomial proportion.
pub fn binomial_std_error(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}
