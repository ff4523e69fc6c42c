//! Fake detectors.
//!
//! Both detectors accept `x` as real when it lies in `(r/2) K`, where `K` is
//! cut out by the half-spaces `<x, h> < ||h||_2^2`. For the proximity test
//! the `h` range over the trick set itself, which is the same as asking
//! whether `x` is closer to the origin than to every point of `rT`.

use serde::{Deserialize, Serialize};

use crate::error::{check_radius, check_vector, Error, Result};
use crate::tricksets::TrickSet;
use crate::widths::FocusSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Real,
    Fake,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub statistic: f64,
}

impl Verdict {
    /// `Real` iff the statistic is strictly below `r / 2`.
    fn from_statistic(statistic: f64, r: f64) -> Self {
        let kind = if statistic < r / 2.0 { VerdictKind::Real } else { VerdictKind::Fake };
        Verdict { kind, statistic }
    }

    pub fn is_real(&self) -> bool {
        self.kind == VerdictKind::Real
    }
}

/// Proximity test at radius `r`.
pub fn proximity_verdict(set: &TrickSet, r: f64, x: &[f64]) -> Result<Verdict> {
    check_radius(r)?;
    Ok(Verdict::from_statistic(set.scaled_support(x)?, r))
}

/// Focused test: statistic `max_{h in H} <x, h> / ||h||_2^2`.
pub fn focused_verdict(h: &[Vec<f64>], r: f64, x: &[f64]) -> Result<Verdict> {
    check_radius(r)?;
    if h.is_empty() {
        return Err(Error::InvalidFocusSet("detector directions must be non-empty".into()));
    }
    let mut stat = f64::NEG_INFINITY;
    for hk in h {
        check_vector(x.len(), hk)?;
        let n2: f64 = hk.iter().map(|v| v * v).sum();
        if n2 == 0.0 {
            return Err(Error::InvalidFocusSet("zero detector direction".into()));
        }
        let ip: f64 = hk.iter().zip(x).map(|(a, b)| a * b).sum();
        stat = stat.max(ip / n2);
    }
    check_vector(h[0].len(), x)?;
    Ok(Verdict::from_statistic(stat, r))
}

/// A detector with its radius fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Detector {
    Proximity { r: f64, trick_set: TrickSet },
    /// Built from a focus set `S`; the directions are `h = s / ||s||_2^2`.
    Focused { r: f64, focus: FocusSet },
}

impl Detector {
    pub fn radius(&self) -> f64 {
        match self {
            Detector::Proximity { r, .. } | Detector::Focused { r, .. } => *r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_radius(self.radius())
    }

    /// The test statistic; `Real` iff it is below `r / 2`. Unchecked.
    pub(crate) fn statistic(&self, x: &[f64]) -> f64 {
        match self {
            Detector::Proximity { trick_set, .. } => trick_set.scaled_support_unchecked(x),
            // h / ||h||^2 = s for h = s / ||s||^2.
            Detector::Focused { focus, .. } => focus.support(x),
        }
    }

    pub fn verdict(&self, x: &[f64]) -> Result<Verdict> {
        match self {
            Detector::Proximity { r, trick_set } => proximity_verdict(trick_set, *r, x),
            Detector::Focused { r, focus } => focused_verdict(&focus.to_h(), *r, x),
        }
    }
}

/// A detector family, parameterized by the swept radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorFamily {
    Proximity,
    Focused { focus: FocusSet },
}

impl DetectorFamily {
    pub fn at(&self, set: &TrickSet, r: f64) -> Detector {
        match self {
            DetectorFamily::Proximity => Detector::Proximity { r, trick_set: set.clone() },
            DetectorFamily::Focused { focus } => Detector::Focused { r, focus: focus.clone() },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DetectorFamily::Proximity => "proximity",
            DetectorFamily::Focused { .. } => "focused",
        }
    }

    /// The radius-independent test statistic of every member. Unchecked.
    pub(crate) fn statistic(&self, set: &TrickSet, x: &[f64]) -> f64 {
        match self {
            DetectorFamily::Proximity => set.scaled_support_unchecked(x),
            DetectorFamily::Focused { focus } => focus.support(x),
        }
    }
}
