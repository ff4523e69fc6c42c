//! Job configurations for the subcommands that do not take a sweep config.

use fakewidth::{DataDistribution, FocusCandidate, TrickSet};
use serde::{Deserialize, Serialize};

fn default_samples() -> usize {
    10_000
}

/// `width`: Monte Carlo scaled width of a trick set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthConfig {
    pub trick_set: TrickSet,
    pub distribution: DataDistribution,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
}

/// `invariance`: sign-flip pushforward check at one radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub trick_set: TrickSet,
    pub distribution: DataDistribution,
    pub r: f64,
    #[serde(default = "default_samples")]
    pub trials: usize,
    pub seed: u64,
}

/// `focused`: smallest width over candidate focus sets passing the polar
/// condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocusedConfig {
    pub trick_set: TrickSet,
    pub distribution: DataDistribution,
    pub candidates: Vec<FocusCandidate>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
}

/// Configurations carrying a master seed that `--seed` may override.
pub trait Seeded {
    fn seed(&self) -> u64;
    fn seed_mut(&mut self) -> &mut u64;
}

macro_rules! seeded {
    ($($t:ty),*) => {$(
        impl Seeded for $t {
            fn seed(&self) -> u64 {
                self.seed
            }

            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
        }
    )*};
}

seeded!(WidthConfig, InvarianceConfig, FocusedConfig, fakewidth::experiments::SweepConfig);
