//! Trick sets: the geometric sets of moves available to the adversary.
//!
//! Every variant evaluates its functionals in closed form. The highly
//! symmetric variants (`NormThreshold`, `SparseNorm`, `SupportFamily`) can be
//! written as
//!
//! ```text
//! T = { t : supp(t) = I for some admissible support I, ||t||_2 >= nu(I) }
//! ```
//!
//! which is what the sign-flip search relies on. `HalfCoordinate` is the
//! unit-sphere slice `{ ||t||_2 = 1, |t_1| = 1/2 }` and has no such form.
//!
//! Supports are stored 0-based internally and serialized 1-based.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryOutcome;
use crate::error::{check_radius, check_vector, Error, Result};

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// A non-empty, strictly increasing set of 0-based coordinate indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("support set must be non-empty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("support set has repeated indices"));
        }
        if let Some(&i) = indices.last().filter(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "support index {} out of range for dimension {n}",
                i + 1
            )));
        }
        Ok(SupportSet(indices))
    }

    /// Builds a support from 1-based indices, as used in configuration files.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::invalid("support indices are 1-based; found 0"));
        }
        Self::new(indices.iter().map(|i| i - 1).collect(), n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportEntry {
    pub support: SupportSet,
    pub threshold: f64,
}

/// The adversary's set of tricks `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "repr::TrickSetRepr", into = "repr::TrickSetRepr")]
pub enum TrickSet {
    /// `{ t : ||t||_2 >= rho0 }`
    NormThreshold { n: usize, rho0: f64 },
    /// `{ t : ||t||_2 >= rho0, ||t||_0 <= s }`
    SparseNorm { n: usize, s: usize, rho0: f64 },
    /// Explicit supports with per-support norm thresholds, sorted by support.
    SupportFamily { n: usize, entries: Vec<SupportEntry> },
    /// `{ t : ||t||_2 = 1, |t_1| = 1/2 }`
    HalfCoordinate { n: usize },
}

/// The argmax support of the sign-flip search, together with the quantities
/// the feasibility check needs.
#[derive(Clone, Debug, PartialEq)]
pub struct BestSupport {
    pub support: SupportSet,
    /// `||x_I||_2`
    pub norm: f64,
    /// `nu(I)`
    pub threshold: f64,
}

impl BestSupport {
    pub fn ratio(&self) -> f64 {
        self.norm / self.threshold
    }
}

/// `x` with its signs reversed on the best support.
pub(crate) struct SignFlipImage {
    pub fake: Vec<f64>,
    pub best: BestSupport,
}

impl SignFlipImage {
    pub fn feasible(&self, r: f64) -> bool {
        2.0 * self.best.norm >= r * self.best.threshold
    }
}

fn check_threshold(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TrickSet {
    pub fn norm_threshold(n: usize, rho0: f64) -> Result<Self> {
        let t = TrickSet::NormThreshold { n, rho0 };
        t.validate()?;
        Ok(t)
    }

    pub fn sparse_norm(n: usize, s: usize, rho0: f64) -> Result<Self> {
        let t = TrickSet::SparseNorm { n, s, rho0 };
        t.validate()?;
        Ok(t)
    }

    /// Entries are re-sorted lexicographically by support so that argmax ties
    /// resolve to the smallest support.
    pub fn support_family(n: usize, mut entries: Vec<SupportEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.support.cmp(&b.support));
        let t = TrickSet::SupportFamily { n, entries };
        t.validate()?;
        Ok(t)
    }

    pub fn half_coordinate(n: usize) -> Result<Self> {
        let t = TrickSet::HalfCoordinate { n };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        match self {
            TrickSet::NormThreshold { rho0, .. } => check_threshold("rho0", *rho0),
            TrickSet::SparseNorm { n, s, rho0 } => {
                if *s == 0 || s > n {
                    return Err(Error::invalid(format!(
                        "sparsity must satisfy 1 <= s <= n, got s = {s}, n = {n}"
                    )));
                }
                check_threshold("rho0", *rho0)
            }
            TrickSet::SupportFamily { n, entries } => {
                if entries.is_empty() {
                    return Err(Error::invalid("support family must have at least one entry"));
                }
                for e in entries {
                    check_threshold("support threshold", e.threshold)?;
                    if e.support.is_empty() {
                        return Err(Error::invalid("support set must be non-empty"));
                    }
                    if e.support.indices().iter().any(|&i| i >= *n) {
                        return Err(Error::invalid("support index out of range"));
                    }
                }
                if entries.windows(2).any(|w| w[0].support >= w[1].support) {
                    return Err(Error::invalid(
                        "support family entries must have distinct supports in sorted order",
                    ));
                }
                Ok(())
            }
            TrickSet::HalfCoordinate { n } => {
                if *n < 2 {
                    return Err(Error::invalid("half-coordinate set needs n >= 2"));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrickSet::NormThreshold { n, .. }
            | TrickSet::SparseNorm { n, .. }
            | TrickSet::SupportFamily { n, .. }
            | TrickSet::HalfCoordinate { n } => *n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TrickSet::NormThreshold { .. } => "norm_threshold",
            TrickSet::SparseNorm { .. } => "sparse_norm",
            TrickSet::SupportFamily { .. } => "support_family",
            TrickSet::HalfCoordinate { .. } => "half_coordinate",
        }
    }

    pub fn is_highly_symmetric(&self) -> bool {
        !matches!(self, TrickSet::HalfCoordinate { .. })
    }

    /// Smallest Euclidean norm of a trick.
    pub fn inradius(&self) -> f64 {
        match self {
            TrickSet::NormThreshold { rho0, .. } | TrickSet::SparseNorm { rho0, .. } => *rho0,
            TrickSet::SupportFamily { entries, .. } => entries
                .iter()
                .map(|e| e.threshold)
                .fold(f64::INFINITY, f64::min),
            TrickSet::HalfCoordinate { .. } => 1.0,
        }
    }

    /// `sup_{t in T} <x, t / ||t||_2^2>`, evaluated exactly.
    pub fn scaled_support(&self, x: &[f64]) -> Result<f64> {
        check_vector(self.dim(), x)?;
        Ok(self.scaled_support_unchecked(x))
    }

    /// As [`scaled_support`](Self::scaled_support) without input validation,
    /// for the Monte Carlo inner loops.
    pub(crate) fn scaled_support_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            TrickSet::NormThreshold { rho0, .. } => norm(x) / rho0,
            TrickSet::SparseNorm { s, rho0, .. } => top_support(x, *s).1.sqrt() / rho0,
            TrickSet::SupportFamily { entries, .. } => entries
                .iter()
                .map(|e| restricted_sumsq(x, e.support.indices()).sqrt() / e.threshold)
                .fold(f64::NEG_INFINITY, f64::max),
            TrickSet::HalfCoordinate { .. } => 0.5 * x[0].abs() + HALF_SQRT3 * norm(&x[1..]),
        }
    }

    /// Support maximizing `||x_I||_2 / nu(I)` over the admissible supports,
    /// ties broken towards the lexicographically smallest support. Returns
    /// `Ok(None)` when `x = 0` (no support carries any mass).
    ///
    /// The result depends on `|x|` only.
    pub fn best_support(&self, x: &[f64]) -> Result<Option<BestSupport>> {
        check_vector(self.dim(), x)?;
        let n = self.dim();
        let best = match self {
            TrickSet::HalfCoordinate { .. } => {
                return Err(Error::NotHighlySymmetric(self.kind_name()))
            }
            TrickSet::NormThreshold { rho0, .. } => {
                let nonzero: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
                if nonzero.is_empty() {
                    return Ok(None);
                }
                BestSupport {
                    support: SupportSet(nonzero),
                    norm: norm(x),
                    threshold: *rho0,
                }
            }
            TrickSet::SparseNorm { s, rho0, .. } => {
                let (support, sumsq) = top_support(x, *s);
                if support.is_empty() {
                    return Ok(None);
                }
                BestSupport {
                    support: SupportSet(support),
                    norm: sumsq.sqrt(),
                    threshold: *rho0,
                }
            }
            TrickSet::SupportFamily { entries, .. } => {
                let mut best: Option<(&SupportEntry, f64, f64)> = None;
                for e in entries {
                    let nrm = restricted_sumsq(x, e.support.indices()).sqrt();
                    let ratio = nrm / e.threshold;
                    if best.is_none_or(|(_, _, r)| ratio > r) {
                        best = Some((e, nrm, ratio));
                    }
                }
                let (e, nrm, _) = best.expect("support family is non-empty");
                if nrm == 0.0 {
                    return Ok(None);
                }
                BestSupport {
                    support: e.support.clone(),
                    norm: nrm,
                    threshold: e.threshold,
                }
            }
        };
        Ok(Some(best))
    }

    /// The sign-flip move at radius `r`: flip the signs of `x` on the best
    /// support if `||2 x_I||_2 >= r nu(I)`, otherwise give up.
    pub fn sign_flip_candidate(&self, x: &[f64], r: f64) -> Result<AdversaryOutcome> {
        if !self.is_highly_symmetric() {
            return Err(Error::NotHighlySymmetric(self.kind_name()));
        }
        check_radius(r)?;
        let Some(flip) = self.sign_flip_image(x)? else {
            return Ok(AdversaryOutcome::GiveUp);
        };
        if !flip.feasible(r) {
            return Ok(AdversaryOutcome::GiveUp);
        }
        let mut trick = vec![0.0; x.len()];
        for &i in flip.best.support.indices() {
            trick[i] = -2.0 * x[i] / r;
        }
        Ok(AdversaryOutcome::Fake { fake: flip.fake, trick })
    }

    /// The radius-independent part of the sign-flip move. `None` when no
    /// radius admits the flip.
    pub(crate) fn sign_flip_image(&self, x: &[f64]) -> Result<Option<SignFlipImage>> {
        let Some(best) = self.best_support(x)? else {
            return Ok(None);
        };
        // An explicit family admits only tricks with support exactly I, so a
        // zero inside x_I cannot be realized.
        if matches!(self, TrickSet::SupportFamily { .. })
            && best.support.indices().iter().any(|&i| x[i] == 0.0)
        {
            return Ok(None);
        }
        let mut fake = x.to_vec();
        for &i in best.support.indices() {
            fake[i] = -x[i];
        }
        Ok(Some(SignFlipImage { fake, best }))
    }

    /// Whether `t` lies in the set, with additive tolerance `tol` on norm
    /// constraints. Support constraints are checked exactly.
    pub fn membership(&self, t: &[f64], tol: f64) -> Result<bool> {
        check_vector(self.dim(), t)?;
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::invalid(format!("tolerance must be non-negative, got {tol}")));
        }
        let nrm = norm(t);
        Ok(match self {
            TrickSet::NormThreshold { rho0, .. } => nrm >= rho0 - tol,
            TrickSet::SparseNorm { s, rho0, .. } => {
                t.iter().filter(|v| **v != 0.0).count() <= *s && nrm >= rho0 - tol
            }
            TrickSet::SupportFamily { entries, .. } => {
                let supp: Vec<usize> = (0..t.len()).filter(|&i| t[i] != 0.0).collect();
                entries
                    .iter()
                    .any(|e| e.support.indices() == supp.as_slice() && nrm >= e.threshold - tol)
            }
            TrickSet::HalfCoordinate { .. } => {
                (nrm - 1.0).abs() <= tol && (t[0].abs() - 0.5).abs() <= tol
            }
        })
    }

    /// A deterministic member of the set, used as the default fixed trick.
    pub fn canonical_member(&self) -> Vec<f64> {
        let n = self.dim();
        let mut t = vec![0.0; n];
        match self {
            TrickSet::NormThreshold { rho0, .. } | TrickSet::SparseNorm { rho0, .. } => {
                t[0] = *rho0;
            }
            TrickSet::SupportFamily { entries, .. } => {
                let e = &entries[0];
                let c = e.threshold / (e.support.len() as f64).sqrt();
                for &i in e.support.indices() {
                    t[i] = c;
                }
            }
            TrickSet::HalfCoordinate { .. } => {
                t[0] = 0.5;
                t[1] = HALF_SQRT3;
            }
        }
        t
    }

    /// A random member of minimal norm on a random admissible support.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let mut t = vec![0.0; n];
        let gaussian_fill = |t: &mut [f64], idx: &[usize], target: f64, rng: &mut R| loop {
            for &i in idx {
                t[i] = rng.sample(StandardNormal);
            }
            let nrm = restricted_sumsq(t, idx).sqrt();
            if nrm > 0.0 && idx.iter().all(|&i| t[i] != 0.0) {
                for &i in idx {
                    t[i] *= target / nrm;
                }
                break;
            }
        };
        match self {
            TrickSet::NormThreshold { rho0, .. } => {
                let all: Vec<usize> = (0..n).collect();
                gaussian_fill(&mut t, &all, *rho0, rng);
            }
            TrickSet::SparseNorm { s, rho0, .. } => {
                let mut idx = rand::seq::index::sample(rng, n, *s).into_vec();
                idx.sort_unstable();
                gaussian_fill(&mut t, &idx, *rho0, rng);
            }
            TrickSet::SupportFamily { entries, .. } => {
                let e = &entries[rng.gen_range(0..entries.len())];
                gaussian_fill(&mut t, e.support.indices(), e.threshold, rng);
            }
            TrickSet::HalfCoordinate { .. } => {
                let rest: Vec<usize> = (1..n).collect();
                gaussian_fill(&mut t, &rest, HALF_SQRT3, rng);
                t[0] = if rng.gen::<bool>() { 0.5 } else { -0.5 };
            }
        }
        t
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn restricted_sumsq(x: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| x[i] * x[i]).sum()
}

/// Best support of size `min(s, nnz(x))` and its squared norm.
///
/// Coordinates are ranked by decreasing `|x_i|`, ties to the smaller index;
/// the squared norm is accumulated in that rank order. The returned support is
/// sorted ascending and is empty iff `x = 0`.
fn top_support(x: &[f64], s: usize) -> (Vec<usize>, f64) {
    let by_rank = |&a: &usize, &b: &usize| -> Ordering {
        x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..x.len()).collect();
    if s < idx.len() {
        idx.select_nth_unstable_by(s - 1, by_rank);
        idx.truncate(s);
    }
    idx.sort_unstable_by(by_rank);
    idx.retain(|&i| x[i] != 0.0);
    let sumsq = idx.iter().fold(0.0, |acc, &i| acc + x[i] * x[i]);
    idx.sort_unstable();
    (idx, sumsq)
}

mod repr {
    use super::*;

    fn default_rho0() -> f64 {
        1.0
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct EntryRepr {
        pub support: Vec<usize>,
        pub threshold: f64,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
    pub enum TrickSetRepr {
        NormThreshold {
            n: usize,
            #[serde(default = "default_rho0")]
            rho0: f64,
        },
        SparseNorm {
            n: usize,
            s: usize,
            #[serde(default = "default_rho0")]
            rho0: f64,
        },
        SupportFamily {
            n: usize,
            entries: Vec<EntryRepr>,
        },
        HalfCoordinate {
            n: usize,
        },
    }

    impl TryFrom<TrickSetRepr> for TrickSet {
        type Error = Error;

        fn try_from(r: TrickSetRepr) -> Result<Self> {
            match r {
                TrickSetRepr::NormThreshold { n, rho0 } => TrickSet::norm_threshold(n, rho0),
                TrickSetRepr::SparseNorm { n, s, rho0 } => TrickSet::sparse_norm(n, s, rho0),
                TrickSetRepr::SupportFamily { n, entries } => {
                    let entries = entries
                        .into_iter()
                        .map(|e| {
                            Ok(SupportEntry {
                                support: SupportSet::from_one_based(&e.support, n)?,
                                threshold: e.threshold,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    TrickSet::support_family(n, entries)
                }
                TrickSetRepr::HalfCoordinate { n } => TrickSet::half_coordinate(n),
            }
        }
    }

    impl From<TrickSet> for TrickSetRepr {
        fn from(t: TrickSet) -> Self {
            match t {
                TrickSet::NormThreshold { n, rho0 } => TrickSetRepr::NormThreshold { n, rho0 },
                TrickSet::SparseNorm { n, s, rho0 } => TrickSetRepr::SparseNorm { n, s, rho0 },
                TrickSet::SupportFamily { n, entries } => TrickSetRepr::SupportFamily {
                    n,
                    entries: entries
                        .into_iter()
                        .map(|e| EntryRepr {
                            support: e.support.one_based(),
                            threshold: e.threshold,
                        })
                        .collect(),
                },
                TrickSet::HalfCoordinate { n } => TrickSetRepr::HalfCoordinate { n },
            }
        }
    }
}
