//! Checks that sign-flipped fakes have the law of the real data.
//!
//! Discrete data in low dimension is checked exactly by pushing every atom
//! through the attack. Otherwise the fakes from an independent arm are
//! compared with real draws by two-sample KS tests on one-dimensional
//! projections. The KS comparison conditions on attack success, so it only
//! runs when success is nearly certain.

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryOutcome, AdversaryStrategy};
use crate::distributions::{DataDistribution, SeedSpec};
use crate::error::{check_radius, Error, Result};
use crate::mc::map_trials;
use crate::stats::ks_two_sample;
use crate::tricksets::TrickSet;

/// Required attack success probability.
pub const MIN_SUCCESS: f64 = 0.999;
/// Largest dimension enumerated exactly.
pub const EXACT_MAX_DIM: usize = 10;
/// Random projection directions in the KS check.
pub const KS_DIRECTIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsProjection {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InvarianceReport {
    Exact {
        n: usize,
        atoms: usize,
        success_probability: f64,
        /// `max_x |P(fake = x) - P(X = x)|`
        max_pmf_discrepancy: f64,
    },
    Ks {
        success_probability: f64,
        real_samples: usize,
        fake_samples: usize,
        projections: Vec<KsProjection>,
    },
}

impl InvarianceReport {
    pub fn min_p_value(&self) -> Option<f64> {
        match self {
            InvarianceReport::Exact { .. } => None,
            InvarianceReport::Ks { projections, .. } => {
                Some(projections.iter().map(|p| p.p_value).fold(1.0, f64::min))
            }
        }
    }
}

pub fn invariance_check(
    set: &TrickSet,
    dist: &DataDistribution,
    r: f64,
    trials: usize,
    seed: &SeedSpec,
) -> Result<InvarianceReport> {
    check_radius(r)?;
    let adversary = AdversaryStrategy::sign_flip(set.clone())?;
    if dist.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: dist.dim() });
    }
    if dist.is_discrete() && dist.dim() <= EXACT_MAX_DIM {
        exact_pushforward(&adversary, dist.dim(), r)
    } else {
        ks_projections(&adversary, dist, r, trials, seed)
    }
}

fn exact_pushforward(adversary: &AdversaryStrategy, n: usize, r: f64) -> Result<InvarianceReport> {
    let atoms = 1usize << n;
    let point = |k: usize| -> Vec<f64> {
        (0..n).map(|i| if k >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
    };
    let index = |x: &[f64]| -> Option<usize> {
        let mut k = 0;
        for (i, &v) in x.iter().enumerate() {
            if v == -1.0 {
                k |= 1 << i;
            } else if v != 1.0 {
                return None;
            }
        }
        Some(k)
    };
    let mut counts = vec![0u64; atoms];
    let mut successes = 0usize;
    for k in 0..atoms {
        let x = point(k);
        let image = match adversary.attack(&x, r)? {
            AdversaryOutcome::Fake { fake, .. } => {
                successes += 1;
                fake
            }
            AdversaryOutcome::GiveUp => x,
        };
        let j = index(&image)
            .ok_or_else(|| Error::invalid("sign-flip image left the hypercube"))?;
        counts[j] += 1;
    }
    let success_probability = successes as f64 / atoms as f64;
    if success_probability < MIN_SUCCESS {
        return Err(Error::SuccessTooLow { estimated: success_probability, required: MIN_SUCCESS });
    }
    let max_pmf_discrepancy = counts
        .iter()
        .map(|&c| (c as f64 - 1.0).abs() / atoms as f64)
        .fold(0.0, f64::max);
    Ok(InvarianceReport::Exact { n, atoms, success_probability, max_pmf_discrepancy })
}

fn ks_projections(
    adversary: &AdversaryStrategy,
    dist: &DataDistribution,
    r: f64,
    trials: usize,
    seed: &SeedSpec,
) -> Result<InvarianceReport> {
    if trials < 2 {
        return Err(Error::invalid("KS invariance check needs at least 2 trials"));
    }
    let real_seed = seed.derive("invariance-real");
    let fake_seed = seed.derive("invariance-fake");
    let real = map_trials(trials, |i| dist.sample(&real_seed, i));
    let outcomes = map_trials(trials, |i| adversary.attack(&dist.sample(&fake_seed, i), r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let fakes: Vec<Vec<f64>> = outcomes
        .into_iter()
        .filter_map(|o| match o {
            AdversaryOutcome::Fake { fake, .. } => Some(fake),
            AdversaryOutcome::GiveUp => None,
        })
        .collect();
    let success_probability = fakes.len() as f64 / trials as f64;
    if success_probability < MIN_SUCCESS {
        return Err(Error::SuccessTooLow { estimated: success_probability, required: MIN_SUCCESS });
    }

    let n = dist.dim();
    let dir_seed = seed.derive("invariance-directions");
    let gaussian = DataDistribution::gaussian(n);
    let directions: Vec<Vec<f64>> = (0..KS_DIRECTIONS as u64)
        .map(|k| {
            let mut d = gaussian.sample(&dir_seed, k);
            let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter_mut().for_each(|v| *v /= nd);
            d
        })
        .collect();

    let mut projections = Vec::with_capacity(KS_DIRECTIONS + 1);
    let norm = |x: &Vec<f64>| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ks = ks_two_sample(
        &real.iter().map(norm).collect::<Vec<_>>(),
        &fakes.iter().map(norm).collect::<Vec<_>>(),
    );
    projections.push(KsProjection { name: "norm".into(), statistic: ks.statistic, p_value: ks.p_value });
    for (k, d) in directions.iter().enumerate() {
        let proj = |x: &Vec<f64>| x.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
        let ks = ks_two_sample(
            &real.iter().map(proj).collect::<Vec<_>>(),
            &fakes.iter().map(proj).collect::<Vec<_>>(),
        );
        projections.push(KsProjection {
            name: format!("direction_{k}"),
            statistic: ks.statistic,
            p_value: ks.p_value,
        });
    }
    Ok(InvarianceReport::Ks {
        success_probability,
        real_samples: real.len(),
        fake_samples: fakes.len(),
        projections,
    })
}
