//! The finite detector battery used for empirical lower bounds.
//!
//! Each family is a scalar statistic `g` and the tests `{x : g(x) < c}` for
//! every threshold `c`. Per family we report the best achievable
//! `max(fpr, fnr)` over all thresholds and the largest excess of the real
//! pass rate over the fake pass rate. A finite battery can refute
//! undetectability but never certify it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryOutcome, AdversaryStrategy};
use crate::error::{check_radius, Result};
use crate::tricksets::TrickSet;
use crate::widths::FocusSet;

use super::TrialBank;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFamilyReport {
    pub name: String,
    /// `min_c max(fpr(c), fnr(c))`
    pub best_max_error: f64,
    pub best_threshold: f64,
    /// `max_c [P(real passes) - P(fake passes)]`
    pub max_pass_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub r: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub give_up_rate: f64,
    /// Proximity test at the evaluated radius.
    pub proximity_fpr: f64,
    pub proximity_fnr: f64,
    pub families: Vec<ThresholdFamilyReport>,
}

impl BatteryReport {
    /// Smallest `max(fpr, fnr)` any battery test achieves.
    pub fn min_max_error(&self) -> f64 {
        self.families
            .iter()
            .map(|f| f.best_max_error)
            .chain(std::iter::once(self.proximity_fpr.max(self.proximity_fnr)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest real-minus-fake pass-rate excess over the battery.
    pub fn max_pass_gap(&self) -> f64 {
        self.families.iter().map(|f| f.max_pass_gap).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn family_names(&self) -> Vec<String> {
        self.families.iter().map(|f| f.name.clone()).collect()
    }
}

type Statistic<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

fn statistics<'a>(set: &'a TrickSet, focus: &[&'a FocusSet]) -> Vec<(String, Statistic<'a>)> {
    let mut out: Vec<(String, Statistic<'a>)> = vec![
        ("proximity_statistic".into(), Box::new(|x| set.scaled_support_unchecked(x))),
        ("norm_ball".into(), Box::new(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())),
        ("first_coordinate_halfspace".into(), Box::new(|x| x[0])),
    ];
    for (k, &f) in focus.iter().enumerate() {
        out.push((format!("focused_{k}"), Box::new(move |x| f.support(x))));
    }
    out
}

/// Evaluates the battery on the draws in `bank` with fakes from `adversary`
/// at radius `r`. Give-ups never pass as real.
pub fn evaluate_battery(
    bank: &TrialBank,
    set: &TrickSet,
    adversary: &AdversaryStrategy,
    r: f64,
    focus: &[&FocusSet],
) -> Result<BatteryReport> {
    check_radius(r)?;
    BatteryCache::new(bank, set, adversary, focus)?.evaluate(r)
}

/// Per-trial flip image statistics: `(2 ||x_I||, nu(I), statistics of the fake)`.
type FlipStats = Option<(f64, f64, Vec<f64>)>;

/// Battery statistics of a fixed bank, reused across radii. Sign-flip fakes
/// do not depend on the radius, only their feasibility does, so their
/// statistics are computed once.
pub(crate) struct BatteryCache<'a> {
    bank: &'a TrialBank,
    adversary: &'a AdversaryStrategy,
    stats: Vec<(String, Statistic<'a>)>,
    /// Sorted real statistics, one column per family.
    real: Vec<Vec<f64>>,
    flips: Option<Vec<FlipStats>>,
}

impl<'a> BatteryCache<'a> {
    pub(crate) fn new(
        bank: &'a TrialBank,
        set: &'a TrickSet,
        adversary: &'a AdversaryStrategy,
        focus: &[&'a FocusSet],
    ) -> Result<Self> {
        let stats = statistics(set, focus);
        let k = stats.len();
        let eval = |x: &[f64]| -> Vec<f64> { stats.iter().map(|(_, g)| g(x)).collect() };
        let rows: Vec<Vec<f64>> = bank.draws().par_iter().map(|x| eval(x)).collect();
        let mut real = vec![Vec::with_capacity(bank.len()); k];
        for row in &rows {
            for j in 0..k {
                real[j].push(row[j]);
            }
        }
        for col in &mut real {
            col.sort_unstable_by(f64::total_cmp);
        }
        let flips = match adversary {
            AdversaryStrategy::SignFlip(set) => Some(
                bank.draws()
                    .par_iter()
                    .map(|x| {
                        Ok(set.sign_flip_image(x)?.map(|img| {
                            (2.0 * img.best.norm, img.best.threshold, eval(&img.fake))
                        }))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            AdversaryStrategy::FixedTrick { .. } => None,
        };
        Ok(BatteryCache { bank, adversary, stats, real, flips })
    }

    pub(crate) fn evaluate(&self, r: f64) -> Result<BatteryReport> {
        check_radius(r)?;
        let k = self.stats.len();
        let trials = self.bank.len();
        let fakes: Vec<Vec<f64>> = match &self.flips {
            Some(flips) => flips
                .iter()
                .filter_map(|f| match f {
                    Some((twice_norm, threshold, stats)) if *twice_norm >= r * threshold => {
                        Some(stats.clone())
                    }
                    _ => None,
                })
                .collect(),
            None => self
                .bank
                .draws()
                .par_iter()
                .map(|x| {
                    Ok(match self.adversary.attack(x, r)? {
                        AdversaryOutcome::Fake { fake, .. } => {
                            Some(self.stats.iter().map(|(_, g)| g(&fake)).collect::<Vec<f64>>())
                        }
                        AdversaryOutcome::GiveUp => None,
                    })
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect(),
        };
        let mut fake_cols = vec![Vec::with_capacity(fakes.len()); k];
        for row in &fakes {
            for j in 0..k {
                fake_cols[j].push(row[j]);
            }
        }
        let successes = fakes.len();
        let half = r / 2.0;
        let proximity_fpr =
            self.real[0].iter().filter(|v| **v >= half).count() as f64 / trials as f64;
        let proximity_fnr = fake_cols[0].iter().filter(|v| **v < half).count() as f64 / trials as f64;

        let families = self
            .stats
            .iter()
            .zip(self.real.iter().zip(fake_cols.iter_mut()))
            .map(|((name, _), (real, fake))| {
                let (best_max_error, best_threshold, max_pass_gap) =
                    scan_thresholds(&mut real.clone(), fake, trials);
                ThresholdFamilyReport { name: name.clone(), best_max_error, best_threshold, max_pass_gap }
            })
            .collect();

        let success_rate = successes as f64 / trials as f64;
        Ok(BatteryReport {
            r,
            trials,
            success_rate,
            give_up_rate: 1.0 - success_rate,
            proximity_fpr,
            proximity_fnr,
            families,
        })
    }
}

/// Exact scan over every threshold `c` of the tests `{g < c}`.
///
/// `fpr(c) = #{real >= c} / trials`, `fnr(c) = #{fake < c} / trials`.
/// Returns `(min_c max(fpr, fnr), argmin c, max_c (real_pass - fake_pass))`.
pub(crate) fn scan_thresholds(real: &mut [f64], fake: &mut [f64], trials: usize) -> (f64, f64, f64) {
    real.sort_unstable_by(f64::total_cmp);
    fake.sort_unstable_by(f64::total_cmp);
    let t = trials as f64;
    let mut candidates: Vec<f64> = real.iter().chain(fake.iter()).copied().collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();
    candidates.push(f64::INFINITY);

    let (mut ia, mut ib) = (0usize, 0usize);
    let mut best = (f64::INFINITY, f64::NEG_INFINITY);
    let mut gap: f64 = 0.0;
    for c in candidates {
        while ia < real.len() && real[ia] < c {
            ia += 1;
        }
        while ib < fake.len() && fake[ib] < c {
            ib += 1;
        }
        let fpr = (real.len() - ia) as f64 / t;
        let fnr = ib as f64 / t;
        let m = fpr.max(fnr);
        if m < best.0 {
            best = (m, c);
        }
        gap = gap.max((ia as f64 - ib as f64) / t);
    }
    (best.0, best.1, gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation over a fixed threshold list, for comparison.
    fn brute(real: &[f64], fake: &[f64], trials: usize) -> (f64, f64) {
        let t = trials as f64;
        let mut cs: Vec<f64> = real.iter().chain(fake).copied().collect();
        cs.push(f64::INFINITY);
        cs.push(f64::NEG_INFINITY);
        let mut best = f64::INFINITY;
        let mut gap = f64::NEG_INFINITY;
        for c in cs {
            let fpr = real.iter().filter(|v| **v >= c).count() as f64 / t;
            let fnr = fake.iter().filter(|v| **v < c).count() as f64 / t;
            let rp = real.iter().filter(|v| **v < c).count() as f64 / t;
            best = best.min(fpr.max(fnr));
            gap = gap.max(rp - fnr);
        }
        (best, gap)
    }

    #[test]
    fn scan_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let trials = rng.gen_range(1..40);
            let real: Vec<f64> = (0..trials).map(|_| rng.gen_range(0..10) as f64).collect();
            let fake: Vec<f64> = (0..rng.gen_range(0..=trials))
                .map(|_| rng.gen_range(0..10) as f64 + 2.0)
                .collect();
            let (b, g) = brute(&real, &fake, trials);
            let (s, _, sg) = scan_thresholds(&mut real.clone(), &mut fake.clone(), trials);
            assert_eq!(s, b);
            assert!((sg - g).abs() < 1e-12, "{sg} vs {g}");
        }
    }

    #[test]
    fn identical_arms_force_half_error() {
        let mut real: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut fake = real.clone();
        let (m, _, gap) = scan_thresholds(&mut real, &mut fake, 100);
        assert_eq!(m, 0.5);
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn cached_sign_flip_matches_direct_attack() {
        use crate::distributions::{DataDistribution, SeedSpec};
        let set = TrickSet::sparse_norm(10, 2, 1.0).unwrap();
        let bank = TrialBank::generate(&DataDistribution::rademacher(10), 300, &SeedSpec::new(3));
        let flip = AdversaryStrategy::sign_flip(set.clone()).unwrap();
        let cache = BatteryCache::new(&bank, &set, &flip, &[]).unwrap();
        for r in [0.5, 1.0, 2.0, 2.0f64.sqrt() * 2.0, 3.0] {
            let stats = statistics(&set, &[]);
            let mut real: Vec<Vec<f64>> = vec![Vec::new(); stats.len()];
            let mut fake: Vec<Vec<f64>> = vec![Vec::new(); stats.len()];
            for x in bank.draws() {
                for (j, (_, g)) in stats.iter().enumerate() {
                    real[j].push(g(x));
                }
                if let AdversaryOutcome::Fake { fake: y, .. } = flip.attack(x, r).unwrap() {
                    for (j, (_, g)) in stats.iter().enumerate() {
                        fake[j].push(g(&y));
                    }
                }
            }
            let report = cache.evaluate(r).unwrap();
            assert_eq!(report.success_rate, fake[0].len() as f64 / 300.0);
            for (j, fam) in report.families.iter().enumerate() {
                let (m, _, gap) = scan_thresholds(&mut real[j], &mut fake[j], 300);
                assert_eq!((fam.best_max_error, fam.max_pass_gap), (m, gap));
            }
        }
    }
}
