//! Width functionals: Monte Carlo estimates of the (scaled) width under any
//! data law, closed forms where they exist, and focused-width upper bounds
//! over candidate focus sets.

mod polar;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

pub use polar::PolarCheck;

use crate::distributions::{DataDistribution, SeedSpec};
use crate::error::{check_dim, check_vector, Error, Result};
use crate::mc::{map_trials, mean_and_std_error};
use crate::tricksets::TrickSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthKind {
    Width,
    ScaledWidth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub kind: WidthKind,
}

impl WidthEstimate {
    fn from_values(values: &[f64], kind: WidthKind) -> Self {
        let (mean, std_error) = mean_and_std_error(values);
        WidthEstimate { mean, std_error, samples: values.len(), kind }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// A finite, origin-symmetric set of focus directions with no zero vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FocusSet {
    points: Vec<Vec<f64>>,
}

impl FocusSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidFocusSet("focus set must be non-empty".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidFocusSet("focus vectors must have dimension >= 1".into()));
        }
        for p in &points {
            check_vector(n, p)?;
            if p.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidFocusSet("focus set contains the zero vector".into()));
            }
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            if !points.contains(&neg) {
                return Err(Error::InvalidFocusSet(format!(
                    "focus set is not origin-symmetric: missing the negative of {p:?}"
                )));
            }
        }
        Ok(FocusSet { points })
    }

    /// Builds `S ∪ -S`.
    pub fn symmetrized(points: Vec<Vec<f64>>) -> Result<Self> {
        let mut all = Vec::with_capacity(points.len() * 2);
        for p in points {
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            if !all.contains(&p) {
                all.push(p);
            }
            if !all.contains(&neg) {
                all.push(neg);
            }
        }
        Self::new(all)
    }

    /// `{±scale e_i}` for the given 0-based coordinate.
    pub fn coordinate_pair(n: usize, i: usize, scale: f64) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid("coordinate out of range"));
        }
        let mut p = vec![0.0; n];
        p[i] = scale;
        Self::symmetrized(vec![p])
    }

    /// The regular `2k`-gon of circumradius `radius` in the plane.
    pub fn regular_polygon(k: usize, radius: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("polygon needs at least one vertex pair"));
        }
        let pts = (0..k)
            .map(|j| {
                let th = std::f64::consts::PI * j as f64 / k as f64;
                vec![radius * th.cos(), radius * th.sin()]
            })
            .collect();
        Self::symmetrized(pts)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `max_{s in S} <x, s>`
    pub fn support(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|s| s.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The detector directions `h = s / ||s||_2^2`.
    pub fn to_h(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|s| {
                let n2: f64 = s.iter().map(|v| v * v).sum();
                s.iter().map(|v| v / n2).collect()
            })
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for FocusSet {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        FocusSet::new(points)
    }
}

impl From<FocusSet> for Vec<Vec<f64>> {
    fn from(f: FocusSet) -> Self {
        f.points
    }
}

/// A candidate for the focused-width infimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocusCandidate {
    Points(FocusSet),
    /// The rewriting `H = T`, whose width is the scaled width of `T` itself.
    TrickSet,
}

fn check_dist(set_dim: usize, dist: &DataDistribution) -> Result<()> {
    if set_dim != dist.dim() {
        return Err(Error::DimensionMismatch { expected: set_dim, got: dist.dim() });
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {samples}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `E sup_{t in T} <X, t / ||t||_2^2>`.
pub fn estimate_scaled_width(
    set: &TrickSet,
    dist: &DataDistribution,
    samples: usize,
    seed: &SeedSpec,
) -> Result<WidthEstimate> {
    check_dist(set.dim(), dist)?;
    check_samples(samples)?;
    let values = map_trials(samples, |i| set.scaled_support_unchecked(&dist.sample(seed, i)));
    Ok(WidthEstimate::from_values(&values, WidthKind::ScaledWidth))
}

/// Monte Carlo estimate of `E max_{s in S} <X, s>`.
pub fn estimate_width(
    focus: &FocusSet,
    dist: &DataDistribution,
    samples: usize,
    seed: &SeedSpec,
) -> Result<WidthEstimate> {
    check_dist(focus.dim(), dist)?;
    check_samples(samples)?;
    let values = map_trials(samples, |i| focus.support(&dist.sample(seed, i)));
    Ok(WidthEstimate::from_values(&values, WidthKind::Width))
}

/// `E ||g||_2` for a standard Gaussian vector in `R^n`, via log-gamma.
pub fn expected_gaussian_norm(n: usize) -> f64 {
    let n = n as f64;
    std::f64::consts::SQRT_2 * (ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

/// Exact Gaussian scaled width where a closed form is known.
pub fn analytic_scaled_width(set: &TrickSet) -> Option<f64> {
    match set {
        TrickSet::NormThreshold { n, rho0 } => Some(expected_gaussian_norm(*n) / rho0),
        TrickSet::HalfCoordinate { n } => Some(
            0.5 * (2.0 / std::f64::consts::PI).sqrt()
                + 0.5 * 3f64.sqrt() * expected_gaussian_norm(n - 1),
        ),
        TrickSet::SparseNorm { .. } | TrickSet::SupportFamily { .. } => None,
    }
}

/// Decides whether every trick correlates at least 1 with some focus point.
pub fn verify_polar_condition(set: &TrickSet, focus: &FocusSet) -> Result<PolarCheck> {
    check_dim(set.dim(), &focus.points()[0])?;
    Ok(polar::check(set, focus))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocusedBound {
    pub estimate: WidthEstimate,
    /// Index of the winning candidate.
    pub chosen: usize,
    pub candidate: FocusCandidate,
    /// Candidates dropped because the polar condition was not established.
    pub excluded: Vec<(usize, PolarCheck)>,
}

/// Smallest width among the candidates that satisfy the polar condition; an
/// upper bound on the focused width. All candidates share the same draws.
pub fn focused_width_upper_bound(
    set: &TrickSet,
    candidates: &[FocusCandidate],
    dist: &DataDistribution,
    samples: usize,
    seed: &SeedSpec,
) -> Result<FocusedBound> {
    let mut best: Option<(usize, WidthEstimate)> = None;
    let mut excluded = Vec::new();
    for (k, cand) in candidates.iter().enumerate() {
        let est = match cand {
            FocusCandidate::TrickSet => estimate_scaled_width(set, dist, samples, seed)?,
            FocusCandidate::Points(focus) => {
                let check = verify_polar_condition(set, focus)?;
                if !check.is_satisfied() {
                    excluded.push((k, check));
                    continue;
                }
                estimate_width(focus, dist, samples, seed)?
            }
        };
        if best.as_ref().is_none_or(|(_, b)| est.mean < b.mean) {
            best = Some((k, est));
        }
    }
    let (chosen, estimate) = best.ok_or(Error::NoValidCandidate)?;
    Ok(FocusedBound { estimate, chosen, candidate: candidates[chosen].clone(), excluded })
}

/// JSON record for one width estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub kind: WidthKind,
    pub set: serde_json::Value,
    pub distribution: DataDistribution,
    pub n_samples: usize,
    pub mean: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
}

impl WidthReport {
    pub fn scaled(set: &TrickSet, dist: &DataDistribution, est: &WidthEstimate) -> Result<Self> {
        let analytic = match dist {
            DataDistribution::StandardGaussian { .. } => analytic_scaled_width(set),
            DataDistribution::IidSymmetricBounded { .. } => None,
        };
        Ok(WidthReport {
            kind: est.kind,
            set: serde_json::to_value(set)?,
            distribution: *dist,
            n_samples: est.samples,
            mean: est.mean,
            std_error: est.std_error,
            analytic,
        })
    }

    pub fn focused(focus: &FocusSet, dist: &DataDistribution, est: &WidthEstimate) -> Result<Self> {
        Ok(WidthReport {
            kind: est.kind,
            set: serde_json::to_value(focus)?,
            distribution: *dist,
            n_samples: est.samples,
            mean: est.mean,
            std_error: est.std_error,
            analytic: None,
        })
    }
}
