//! Adversary strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DataDistribution, SeedSpec};
use crate::error::{check_dim, check_radius, check_vector, Error, Result};
use crate::tricksets::TrickSet;

/// Tolerance used when checking that tricks lie in their trick set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryOutcome {
    /// A corrupted point `fake = x + r * trick`.
    Fake { fake: Vec<f64>, trick: Vec<f64> },
    GiveUp,
}

impl AdversaryOutcome {
    pub fn is_fake(&self) -> bool {
        matches!(self, AdversaryOutcome::Fake { .. })
    }

    pub fn fake(&self) -> Option<&[f64]> {
        match self {
            AdversaryOutcome::Fake { fake, .. } => Some(fake),
            AdversaryOutcome::GiveUp => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrategyRepr", into = "StrategyRepr")]
pub enum AdversaryStrategy {
    SignFlip(TrickSet),
    /// Always adds `r * trick`, whatever the data.
    FixedTrick { set: TrickSet, trick: Vec<f64> },
}

impl AdversaryStrategy {
    pub fn sign_flip(set: TrickSet) -> Result<Self> {
        if !set.is_highly_symmetric() {
            return Err(Error::NotHighlySymmetric(set.kind_name()));
        }
        Ok(AdversaryStrategy::SignFlip(set))
    }

    pub fn fixed_trick(set: TrickSet, trick: Vec<f64>) -> Result<Self> {
        check_vector(set.dim(), &trick)?;
        if !set.membership(&trick, MEMBERSHIP_TOL)? {
            return Err(Error::invalid("fixed trick is not a member of the trick set"));
        }
        Ok(AdversaryStrategy::FixedTrick { set, trick })
    }

    pub fn trick_set(&self) -> &TrickSet {
        match self {
            AdversaryStrategy::SignFlip(set) | AdversaryStrategy::FixedTrick { set, .. } => set,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AdversaryStrategy::SignFlip(_) => "sign_flip",
            AdversaryStrategy::FixedTrick { .. } => "fixed_trick",
        }
    }

    /// Corrupts the observed point `x` at radius `r`.
    pub fn attack(&self, x: &[f64], r: f64) -> Result<AdversaryOutcome> {
        check_radius(r)?;
        match self {
            AdversaryStrategy::SignFlip(set) => set.sign_flip_candidate(x, r),
            AdversaryStrategy::FixedTrick { set, trick } => {
                check_dim(set.dim(), x)?;
                let fake = x.iter().zip(trick).map(|(xi, ti)| xi + r * ti).collect();
                Ok(AdversaryOutcome::Fake { fake, trick: trick.clone() })
            }
        }
    }

    /// Fraction of `trials` real draws on which the attack produces a fake.
    pub fn success_probability(
        &self,
        dist: &DataDistribution,
        r: f64,
        trials: usize,
        seed: &SeedSpec,
    ) -> Result<f64> {
        check_radius(r)?;
        check_dim(self.trick_set().dim(), &vec![0.0; dist.dim()])?;
        if trials == 0 {
            return Err(Error::invalid("need at least one trial"));
        }
        let hits = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let x = dist.sample(seed, i);
                self.attack(&x, r).map(|o| o.is_fake() as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / trials as f64)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StrategyRepr {
    SignFlip { trick_set: TrickSet },
    FixedTrick { trick_set: TrickSet, trick: Vec<f64> },
}

impl TryFrom<StrategyRepr> for AdversaryStrategy {
    type Error = Error;

    fn try_from(r: StrategyRepr) -> Result<Self> {
        match r {
            StrategyRepr::SignFlip { trick_set } => AdversaryStrategy::sign_flip(trick_set),
            StrategyRepr::FixedTrick { trick_set, trick } => {
                AdversaryStrategy::fixed_trick(trick_set, trick)
            }
        }
    }
}

impl From<AdversaryStrategy> for StrategyRepr {
    fn from(s: AdversaryStrategy) -> Self {
        match s {
            AdversaryStrategy::SignFlip(trick_set) => StrategyRepr::SignFlip { trick_set },
            AdversaryStrategy::FixedTrick { set, trick } => {
                StrategyRepr::FixedTrick { trick_set: set, trick }
            }
        }
    }
}
