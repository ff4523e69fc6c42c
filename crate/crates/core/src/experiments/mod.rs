//! Experiment harness: error rates, radius sweeps, detectability bracketing
//! and distribution-invariance checks.
//!
//! All experiments draw the real data for trial `i` from the `"real"` child
//! of the master seed, and the fake arm corrupts those same draws. Results
//! are reduced in trial order, so they are identical for any worker count.

pub mod battery;
pub mod bracket;
pub mod invariance;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{AdversaryOutcome, AdversaryStrategy};
use crate::detection::{Detector, DetectorFamily};
use crate::distributions::{DataDistribution, SeedSpec};
use crate::error::{check_radius, Error, Result};
use crate::mc::{binomial_std_error, map_trials};
use crate::tricksets::TrickSet;
use crate::widths::FocusSet;

pub use battery::{evaluate_battery, BatteryReport, ThresholdFamilyReport};
pub use bracket::{bracket_detectability_radius, bracket_with_config, Bracket, GridPoint};
pub use invariance::{invariance_check, InvarianceReport, KsProjection};

pub const CSV_HEADER: &str = "r,fpr,fnr,success_rate,fpr_se,fnr_se,success_se";

/// Minimum trials per radius accepted in a sweep configuration.
pub const MIN_SWEEP_TRIALS: usize = 100;

/// The real draws shared by every radius of an experiment.
pub struct TrialBank {
    draws: Vec<Vec<f64>>,
}

impl TrialBank {
    pub fn generate(dist: &DataDistribution, trials: usize, seed: &SeedSpec) -> Self {
        let real = seed.derive("real");
        TrialBank { draws: map_trials(trials, |i| dist.sample(&real, i)) }
    }

    pub fn draws(&self) -> &[Vec<f64>] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    /// Real draws flagged as fake.
    pub fpr: f64,
    /// Trials where the adversary produced a fake and it was accepted as real.
    pub fnr: f64,
    /// Trials where the adversary did not give up.
    pub success_rate: f64,
    pub fpr_se: f64,
    pub fnr_se: f64,
    pub success_se: f64,
    pub trials: usize,
}

impl ErrorRates {
    fn from_counts(false_pos: usize, false_neg: usize, successes: usize, trials: usize) -> Self {
        let t = trials as f64;
        let (fpr, fnr, success_rate) = (false_pos as f64 / t, false_neg as f64 / t, successes as f64 / t);
        ErrorRates {
            fpr,
            fnr,
            success_rate,
            fpr_se: binomial_std_error(fpr, trials),
            fnr_se: binomial_std_error(fnr, trials),
            success_se: binomial_std_error(success_rate, trials),
            trials,
        }
    }
}

/// Error rates of `detector` against `adversary` at radius `r` over the
/// draws in `bank`.
pub fn rates_on_bank(
    bank: &TrialBank,
    detector: &Detector,
    adversary: &AdversaryStrategy,
    r: f64,
) -> Result<ErrorRates> {
    check_radius(r)?;
    detector.validate()?;
    let half = detector.radius() / 2.0;
    let per_trial = bank
        .draws
        .par_iter()
        .map(|x| {
            let flagged = detector.statistic(x) >= half;
            let outcome = adversary.attack(x, r)?;
            let (success, passed) = match &outcome {
                AdversaryOutcome::Fake { fake, .. } => (true, detector.statistic(fake) < half),
                AdversaryOutcome::GiveUp => (false, false),
            };
            Ok((flagged, success, passed))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut fp, mut fneg, mut succ) = (0, 0, 0);
    for (flagged, success, passed) in per_trial {
        fp += flagged as usize;
        succ += success as usize;
        fneg += passed as usize;
    }
    Ok(ErrorRates::from_counts(fp, fneg, succ, bank.len()))
}

/// Detector-family statistics of a fixed bank, reused across radii.
pub(crate) struct RatesCache<'a> {
    bank: &'a TrialBank,
    set: &'a TrickSet,
    family: &'a DetectorFamily,
    adversary: &'a AdversaryStrategy,
    real: Vec<f64>,
    /// Sign-flip fakes: `(2 ||x_I||, nu(I), statistic of the fake)`.
    flips: Option<Vec<Option<(f64, f64, f64)>>>,
}

impl<'a> RatesCache<'a> {
    pub(crate) fn new(
        bank: &'a TrialBank,
        set: &'a TrickSet,
        family: &'a DetectorFamily,
        adversary: &'a AdversaryStrategy,
    ) -> Result<Self> {
        family.at(set, 1.0).validate()?;
        let real = bank.draws.par_iter().map(|x| family.statistic(set, x)).collect();
        let flips = match adversary {
            AdversaryStrategy::SignFlip(flip_set) => Some(
                bank.draws
                    .par_iter()
                    .map(|x| {
                        Ok(flip_set.sign_flip_image(x)?.map(|img| {
                            (2.0 * img.best.norm, img.best.threshold, family.statistic(set, &img.fake))
                        }))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            AdversaryStrategy::FixedTrick { .. } => None,
        };
        Ok(RatesCache { bank, set, family, adversary, real, flips })
    }

    pub(crate) fn rates(&self, r: f64) -> Result<ErrorRates> {
        check_radius(r)?;
        let half = r / 2.0;
        let fp = self.real.iter().filter(|v| **v >= half).count();
        let (succ, fneg) = match &self.flips {
            Some(flips) => flips.iter().fold((0, 0), |(succ, fneg), f| match f {
                Some((twice_norm, threshold, stat)) if *twice_norm >= r * threshold => {
                    (succ + 1, fneg + (*stat < half) as usize)
                }
                _ => (succ, fneg),
            }),
            None => {
                let detector = self.family.at(self.set, r);
                let outcomes = self
                    .bank
                    .draws
                    .par_iter()
                    .map(|x| {
                        Ok(match self.adversary.attack(x, r)? {
                            AdversaryOutcome::Fake { fake, .. } => {
                                Some(detector.statistic(&fake) < half)
                            }
                            AdversaryOutcome::GiveUp => None,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                outcomes.iter().fold((0, 0), |(succ, fneg), o| match o {
                    Some(passed) => (succ + 1, fneg + *passed as usize),
                    None => (succ, fneg),
                })
            }
        };
        Ok(ErrorRates::from_counts(fp, fneg, succ, self.bank.len()))
    }
}

/// False-positive, false-negative and adversary-success rates over `trials`
/// fresh real draws.
pub fn error_rates(
    dist: &DataDistribution,
    r: f64,
    detector: &Detector,
    adversary: &AdversaryStrategy,
    trials: usize,
    seed: &SeedSpec,
) -> Result<ErrorRates> {
    check_radius(r)?;
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if dist.dim() != adversary.trick_set().dim() {
        return Err(Error::DimensionMismatch {
            expected: adversary.trick_set().dim(),
            got: dist.dim(),
        });
    }
    let bank = TrialBank::generate(dist, trials, seed);
    rates_on_bank(&bank, detector, adversary, r)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiiGrid {
    Explicit(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl RadiiGrid {
    pub fn radii(&self) -> Result<Vec<f64>> {
        let radii = match self {
            RadiiGrid::Explicit(v) => v.clone(),
            RadiiGrid::Range { min, max, count, spacing } => {
                if *count == 0 {
                    return Err(Error::invalid("radii grid count must be at least 1"));
                }
                if *count == 1 {
                    vec![*min]
                } else {
                    let k = (*count - 1) as f64;
                    (0..*count)
                        .map(|i| {
                            let f = i as f64 / k;
                            match spacing {
                                Spacing::Linear => min + (max - min) * f,
                                Spacing::Geometric => min * (max / min).powf(f),
                            }
                        })
                        .collect()
                }
            }
        };
        if radii.is_empty() {
            return Err(Error::invalid("radii grid is empty"));
        }
        for r in &radii {
            check_radius(*r)?;
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
        Ok(radii)
    }
}

/// Adversary choice in a configuration; the trick set comes from the
/// enclosing config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryFamily {
    SignFlip,
    /// Without an explicit trick the set's canonical member is used.
    FixedTrick {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trick: Option<Vec<f64>>,
    },
}

impl AdversaryFamily {
    /// Sign flipping for highly symmetric sets, a fixed canonical trick
    /// otherwise.
    pub fn default_for(set: &TrickSet) -> Self {
        if set.is_highly_symmetric() {
            AdversaryFamily::SignFlip
        } else {
            AdversaryFamily::FixedTrick { trick: None }
        }
    }

    pub fn resolve(&self, set: &TrickSet) -> Result<AdversaryStrategy> {
        match self {
            AdversaryFamily::SignFlip => AdversaryStrategy::sign_flip(set.clone()),
            AdversaryFamily::FixedTrick { trick } => AdversaryStrategy::fixed_trick(
                set.clone(),
                trick.clone().unwrap_or_else(|| set.canonical_member()),
            ),
        }
    }
}

fn default_u() -> f64 {
    4.0
}

fn default_level() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub trick_set: TrickSet,
    pub distribution: DataDistribution,
    #[serde(default = "proximity")]
    pub detector: DetectorFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryFamily>,
    pub radii: RadiiGrid,
    pub trials: usize,
    pub seed: u64,
    /// Concentration parameter for the theoretical error terms.
    #[serde(default = "default_u")]
    pub u: f64,
    /// Error level used when bracketing the detectability radius.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Extra focus set added to the lower-bound detector battery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<FocusSet>,
}

fn proximity() -> DetectorFamily {
    DetectorFamily::Proximity
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.trick_set.dim();
        if self.distribution.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.distribution.dim() });
        }
        if self.trials < MIN_SWEEP_TRIALS {
            return Err(Error::invalid(format!(
                "trials per radius must be at least {MIN_SWEEP_TRIALS}, got {}",
                self.trials
            )));
        }
        if !(self.u.is_finite() && self.u > 0.0) {
            return Err(Error::invalid("u must be positive"));
        }
        if !(self.level > 0.0 && self.level < 0.5) {
            return Err(Error::invalid("level must lie in (0, 0.5)"));
        }
        self.radii.radii()?;
        for f in self.focus_sets() {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: f.dim() });
            }
        }
        self.adversary_strategy()?;
        Ok(())
    }

    pub fn adversary_family(&self) -> AdversaryFamily {
        self.adversary.clone().unwrap_or_else(|| AdversaryFamily::default_for(&self.trick_set))
    }

    pub fn adversary_strategy(&self) -> Result<AdversaryStrategy> {
        self.adversary_family().resolve(&self.trick_set)
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed)
    }

    /// Focus sets taking part in the battery: the detector's and the extra one.
    pub fn focus_sets(&self) -> Vec<&FocusSet> {
        let mut out = Vec::new();
        if let DetectorFamily::Focused { focus } = &self.detector {
            out.push(focus);
        }
        if let Some(f) = &self.focus {
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    #[serde(flatten)]
    pub rates: ErrorRates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub config: SweepConfig,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

fn unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// One row of error rates per radius of the grid.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let started = unix_ms();
    let adversary = config.adversary_strategy()?;
    let bank = TrialBank::generate(&config.distribution, config.trials, &config.seed_spec());
    let cache = RatesCache::new(&bank, &config.trick_set, &config.detector, &adversary)?;
    let mut rows = Vec::new();
    for r in config.radii.radii()? {
        let rates = cache.rates(r).map_err(|e| Error::AtRadius { r, source: Box::new(e) })?;
        rows.push(SweepRow { r, rates });
    }
    Ok(SweepResult {
        rows,
        metadata: SweepMetadata {
            config_hash: config.hash(),
            seed: config.seed,
            config: config.clone(),
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
        },
    })
}

impl SweepResult {
    /// CSV with the fixed header and shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let q = &row.rates;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.r, q.fpr, q.fnr, q.success_rate, q.fpr_se, q.fnr_se, q.success_se
            );
        }
        out
    }

    /// Two-column `r value` data for one curve: `fpr`, `fnr` or `success_rate`.
    pub fn curve(&self, name: &str) -> Option<String> {
        let pick: fn(&ErrorRates) -> f64 = match name {
            "fpr" => |q| q.fpr,
            "fnr" => |q| q.fnr,
            "success_rate" => |q| q.success_rate,
            _ => return None,
        };
        let mut out = format!("# r {name}\n");
        for row in &self.rows {
            let _ = writeln!(out, "{} {}", row.r, pick(&row.rates));
        }
        Some(out)
    }
}
