//! Laws of the real data and counter-based seeding.
//!
//! Each trial draws from its own ChaCha8 stream: the key is derived from the
//! master seed and a domain label, the stream id is the trial index. A draw
//! is therefore a pure function of `(seed, domain, trial)` and does not depend
//! on how trials are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundedKind {
    Rademacher,
    UniformSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub enum DataDistribution {
    StandardGaussian { n: usize },
    /// Independent symmetric coordinates with values in `[-1, 1]`.
    IidSymmetricBounded { n: usize, kind: BoundedKind },
}

impl DataDistribution {
    pub fn gaussian(n: usize) -> Self {
        DataDistribution::StandardGaussian { n }
    }

    pub fn rademacher(n: usize) -> Self {
        DataDistribution::IidSymmetricBounded { n, kind: BoundedKind::Rademacher }
    }

    pub fn uniform_symmetric(n: usize) -> Self {
        DataDistribution::IidSymmetricBounded { n, kind: BoundedKind::UniformSymmetric }
    }

    pub fn dim(&self) -> usize {
        match self {
            DataDistribution::StandardGaussian { n }
            | DataDistribution::IidSymmetricBounded { n, .. } => *n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DataDistribution::StandardGaussian { .. } => "gaussian",
            DataDistribution::IidSymmetricBounded { kind: BoundedKind::Rademacher, .. } => {
                "rademacher"
            }
            DataDistribution::IidSymmetricBounded {
                kind: BoundedKind::UniformSymmetric, ..
            } => "uniform_symmetric",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            DataDistribution::IidSymmetricBounded { kind: BoundedKind::Rademacher, .. }
        )
    }

    /// Fills `out` with one draw.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            DataDistribution::StandardGaussian { .. } => {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            DataDistribution::IidSymmetricBounded { kind: BoundedKind::Rademacher, .. } => {
                for v in out.iter_mut() {
                    *v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                }
            }
            DataDistribution::IidSymmetricBounded { kind: BoundedKind::UniformSymmetric, .. } => {
                for v in out.iter_mut() {
                    *v = rng.gen_range(-1.0..=1.0);
                }
            }
        }
    }

    /// The draw for trial `trial_index` under `seed`.
    pub fn sample(&self, seed: &SeedSpec, trial_index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.fill(&mut seed.rng(trial_index), &mut out);
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DistributionRepr {
    Gaussian { n: usize },
    Rademacher { n: usize },
    UniformSymmetric { n: usize },
}

impl TryFrom<DistributionRepr> for DataDistribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        let d = match r {
            DistributionRepr::Gaussian { n } => DataDistribution::gaussian(n),
            DistributionRepr::Rademacher { n } => DataDistribution::rademacher(n),
            DistributionRepr::UniformSymmetric { n } => DataDistribution::uniform_symmetric(n),
        };
        if d.dim() == 0 {
            return Err(Error::invalid("distribution dimension must be at least 1"));
        }
        Ok(d)
    }
}

impl From<DataDistribution> for DistributionRepr {
    fn from(d: DataDistribution) -> Self {
        match d {
            DataDistribution::StandardGaussian { n } => DistributionRepr::Gaussian { n },
            DataDistribution::IidSymmetricBounded { n, kind: BoundedKind::Rademacher } => {
                DistributionRepr::Rademacher { n }
            }
            DataDistribution::IidSymmetricBounded { n, kind: BoundedKind::UniformSymmetric } => {
                DistributionRepr::UniformSymmetric { n }
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed plus a domain key. Child domains separate independent arms of
/// an experiment (real draws, random directions, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    #[serde(default)]
    pub domain: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed, domain: 0 }
    }

    /// A child spec whose streams are disjoint from the parent's.
    pub fn derive(&self, label: &str) -> Self {
        let h = label
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3));
        SeedSpec {
            master_seed: self.master_seed,
            domain: splitmix64(self.domain ^ h),
        }
    }

    /// The generator for one trial.
    pub fn rng(&self, trial_index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.master_seed ^ splitmix64(self.domain));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(trial_index);
        rng
    }
}
