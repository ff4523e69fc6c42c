//! Simulation of the insider-adversary fake detection game.
//!
//! Real data `X` is drawn from a known law; an adversary who sees `X` may
//! add `r t` for any trick `t` from a set `T`. The crate provides the trick
//! sets, width estimators, the proximity and focused detectors, the
//! sign-flip adversary, and a harness that measures error rates and brackets
//! the radius at which fakes become detectable.

pub mod adversary;
pub mod detection;
pub mod distributions;
pub mod error;
pub mod experiments;
mod mc;
pub mod stats;
pub mod tricksets;
pub mod widths;

pub use adversary::{AdversaryOutcome, AdversaryStrategy};
pub use detection::{focused_verdict, proximity_verdict, Detector, DetectorFamily, Verdict, VerdictKind};
pub use distributions::{BoundedKind, DataDistribution, SeedSpec};
pub use error::{Error, Result};
pub use mc::{binomial_std_error, mean_and_std_error};
pub use tricksets::{BestSupport, SupportEntry, SupportSet, TrickSet};
pub use widths::{
    analytic_scaled_width, estimate_scaled_width, estimate_width, expected_gaussian_norm,
    focused_width_upper_bound, verify_polar_condition, FocusCandidate, FocusSet, FocusedBound,
    PolarCheck, WidthEstimate, WidthKind, WidthReport,
};
