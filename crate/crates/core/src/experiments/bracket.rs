//! Empirical bracketing of the detectability radius.
//!
//! `r_upper` is the smallest radius (grid scan, then bisection) at which the
//! configured detector has both error rates at most `level`. `r_lower` is the
//! largest radius at which the adversary keeps every battery test at
//! `max(fpr, fnr) >= 1/2 - level`. Both use the same real draws at every
//! radius.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::distributions::{DataDistribution, SeedSpec};
use crate::error::{Error, Result};
use crate::tricksets::TrickSet;
use crate::widths::estimate_scaled_width;

use super::battery::{BatteryCache, BatteryReport};
use super::{ErrorRates, RatesCache, RadiiGrid, Spacing, SweepConfig, TrialBank};

const BISECTION_STEPS: usize = 30;
const BISECTION_REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub r: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub success_rate: f64,
    pub detects: bool,
    pub battery_min_max_error: f64,
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub r_lower: f64,
    pub r_upper: f64,
    pub level: f64,
    pub trials: usize,
    /// Threshold families making up the lower-bound battery.
    pub battery: Vec<String>,
    pub upper_rates: ErrorRates,
    pub lower_battery: BatteryReport,
    pub grid: Vec<GridPoint>,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.r_lower + self.r_upper)
    }

    pub fn contains(&self, r: f64) -> bool {
        self.r_lower <= r && r <= self.r_upper
    }
}

struct Evaluator<'a> {
    cfg: &'a SweepConfig,
    rates: RatesCache<'a>,
    battery: BatteryCache<'a>,
}

impl Evaluator<'_> {
    fn rates(&self, r: f64) -> Result<ErrorRates> {
        self.rates.rates(r).map_err(|e| Error::AtRadius { r, source: Box::new(e) })
    }

    fn battery(&self, r: f64) -> Result<BatteryReport> {
        self.battery.evaluate(r).map_err(|e| Error::AtRadius { r, source: Box::new(e) })
    }

    fn detects(&self, q: &ErrorRates) -> bool {
        q.fpr <= self.cfg.level && q.fnr <= self.cfg.level
    }

    fn forced(&self, b: &BatteryReport) -> bool {
        b.min_max_error() >= 0.5 - self.cfg.level
    }
}

fn diagnostics(msg: &str, grid: &[GridPoint]) -> Error {
    let mut s = format!("{msg}; grid evaluations (r, fpr, fnr, success, battery min max-error):");
    for g in grid {
        let _ = write!(
            s,
            " [{}, {}, {}, {}, {}]",
            g.r, g.fpr, g.fnr, g.success_rate, g.battery_min_max_error
        );
    }
    Error::Bracket(s)
}

/// Brackets the detectability radius on the configured grid.
pub fn bracket_with_config(cfg: &SweepConfig) -> Result<Bracket> {
    cfg.validate()?;
    let radii = cfg.radii.radii()?;
    let bank = TrialBank::generate(&cfg.distribution, cfg.trials, &cfg.seed_spec());
    let adversary = cfg.adversary_strategy()?;
    let focus = cfg.focus_sets();
    let ev = Evaluator {
        cfg,
        rates: RatesCache::new(&bank, &cfg.trick_set, &cfg.detector, &adversary)?,
        battery: BatteryCache::new(&bank, &cfg.trick_set, &adversary, &focus)?,
    };

    let mut grid = Vec::with_capacity(radii.len());
    for &r in &radii {
        let q = ev.rates(r)?;
        let b = ev.battery(r)?;
        grid.push(GridPoint {
            r,
            fpr: q.fpr,
            fnr: q.fnr,
            success_rate: q.success_rate,
            detects: ev.detects(&q),
            battery_min_max_error: b.min_max_error(),
            forced: ev.forced(&b),
        });
    }

    let Some(up) = grid.iter().position(|g| g.detects) else {
        return Err(diagnostics("no grid radius reaches the detection level", &grid));
    };
    let Some(low) = grid.iter().rposition(|g| g.forced) else {
        return Err(diagnostics("the adversary forces the battery at no grid radius", &grid));
    };

    let r_upper = if up == 0 {
        radii[0]
    } else {
        let (mut lo, mut hi) = (radii[up - 1], radii[up]);
        for _ in 0..BISECTION_STEPS {
            if hi - lo <= BISECTION_REL_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if ev.detects(&ev.rates(mid)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let r_lower = if low + 1 == radii.len() {
        radii[low]
    } else {
        let (mut lo, mut hi) = (radii[low], radii[low + 1]);
        for _ in 0..BISECTION_STEPS {
            if hi - lo <= BISECTION_REL_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if ev.forced(&ev.battery(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    if r_lower > r_upper {
        return Err(diagnostics(
            &format!("inconsistent bracket: r_lower = {r_lower} exceeds r_upper = {r_upper}"),
            &grid,
        ));
    }
    let lower_battery = ev.battery(r_lower)?;
    Ok(Bracket {
        r_lower,
        r_upper,
        level: cfg.level,
        trials: cfg.trials,
        battery: lower_battery.family_names(),
        upper_rates: ev.rates(r_upper)?,
        lower_battery,
        grid,
    })
}

/// Brackets the detectability radius with the proximity detector, the
/// default adversary and a geometric grid spanning `[w/50, 16 w]` around the
/// estimated scaled width `w`.
pub fn bracket_detectability_radius(
    set: &TrickSet,
    dist: &DataDistribution,
    trials: usize,
    seed: &SeedSpec,
    level: f64,
) -> Result<Bracket> {
    let w = estimate_scaled_width(set, dist, trials.max(2), &seed.derive("grid-width"))?.mean;
    if w.is_nan() || w <= 0.0 {
        return Err(Error::Bracket(format!("degenerate scaled width estimate {w}")));
    }
    let cfg = SweepConfig {
        trick_set: set.clone(),
        distribution: *dist,
        detector: crate::detection::DetectorFamily::Proximity,
        adversary: None,
        radii: RadiiGrid::Range { min: w / 50.0, max: 16.0 * w, count: 64, spacing: Spacing::Geometric },
        trials,
        seed: seed.master_seed,
        u: 4.0,
        level,
        focus: None,
    };
    bracket_with_config(&cfg)
}
