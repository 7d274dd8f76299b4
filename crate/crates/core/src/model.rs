//! Value types for the participation-bias rating model.
//!
//! Ratings are the integers `1..=m`. Each of `n` raters draws a rating
//! independently from a true distribution `p` and reports it with a
//! rating-dependent probability `g_r ∈ [q, 1]`; unreported ratings are only
//! visible as a count of silent raters. All types here are plain immutable
//! values and every operation is pure.

use crate::error::Error;

/// Slack used when validating quantities that are exact in theory but arrive
/// through floating-point arithmetic (probability sums, `g_r >= q`).
const VALIDATION_EPS: f64 = 1e-9;

/// The rating scale: ratings are the integers `1..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingScale {
    m: usize,
}

impl RatingScale {
    /// A scale needs at least two categories; one category has nothing to
    /// aggregate.
    pub fn new(m: usize) -> Result<Self, Error> {
        if m < 2 {
            return Err(Error::InvalidConfig(format!(
                "rating scale needs m >= 2 categories, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Midpoint `(1 + m) / 2`, the natural score when nothing was observed.
    pub fn midpoint(&self) -> f64 {
        (1.0 + self.m as f64) / 2.0
    }
}

/// A probability distribution over the ratings `1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    /// Entries must be nonnegative and sum to 1 (within floating-point slack).
    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "distribution needs at least 2 categories, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "distribution entries must be finite and nonnegative, got {p}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > VALIDATION_EPS {
            return Err(Error::InvalidConfig(format!(
                "distribution entries must sum to 1, got {sum}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn scale(&self) -> RatingScale {
        RatingScale {
            m: self.probs.len(),
        }
    }

    /// Mean rating `Σ_r r * p_r`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Variance of a single rating drawn from the distribution.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = (i + 1) as f64 - mu;
                d * d * p
            })
            .sum()
    }
}

/// Report probabilities `g_r` together with their common floor `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationProfile {
    g: Vec<f64>,
    q: f64,
}

impl ParticipationProfile {
    /// Requires `q ∈ (0, 1]` and `g_r ∈ [q, 1]` for every rating.
    pub fn new(g: Vec<f64>, q: f64) -> Result<Self, Error> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "participation floor must satisfy 0 < q <= 1, got {q}"
            )));
        }
        if g.is_empty() {
            return Err(Error::InvalidConfig(
                "participation profile must not be empty".into(),
            ));
        }
        for (i, &gr) in g.iter().enumerate() {
            if !gr.is_finite() || gr < q - VALIDATION_EPS || gr > 1.0 + VALIDATION_EPS {
                return Err(Error::InvalidConfig(format!(
                    "report probability g_{} = {gr} must lie in [q, 1] = [{q}, 1]",
                    i + 1
                )));
            }
        }
        Ok(Self { g, q })
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// A complete adversary choice: the rating distribution plus who reports.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationStructure {
    p: CategoricalDistribution,
    g: ParticipationProfile,
}

impl InformationStructure {
    /// The distribution and the profile must cover the same scale.
    pub fn new(p: CategoricalDistribution, g: ParticipationProfile) -> Result<Self, Error> {
        if p.m() != g.g().len() {
            return Err(Error::InvalidConfig(format!(
                "distribution covers {} categories but the profile covers {}",
                p.m(),
                g.g().len()
            )));
        }
        Ok(Self { p, g })
    }

    pub fn p(&self) -> &CategoricalDistribution {
        &self.p
    }

    pub fn g(&self) -> &ParticipationProfile {
        &self.g
    }

    pub fn scale(&self) -> RatingScale {
        self.p.scale()
    }
}

/// What one rater looks like to the platform: either a reported rating or
/// silence. Bucket `r ∈ 1..=m` has probability `p_r * g_r`; the silent bucket
/// collects `Σ_r p_r * (1 - g_r)`.
pub fn observed_marginal(theta: &InformationStructure) -> Vec<f64> {
    let p = theta.p().probs();
    let g = theta.g().g();
    let mut marginal = Vec::with_capacity(p.len() + 1);
    let mut silent = 0.0;
    for (pr, gr) in p.iter().zip(g) {
        marginal.push(pr * gr);
        // clamp: 1 - g_r can round to -0.0-size negatives when g_r ≈ 1
        silent += pr * (1.0 - gr).max(0.0);
    }
    marginal.push(silent);
    marginal
}

/// Counts of the ratings all `n` raters actually hold, observed or not.
/// `counts[r - 1]` is the number of raters whose rating is `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullHistogram {
    pub counts: Vec<u64>,
}

impl FullHistogram {
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sample mean of all ratings. Undefined on an empty histogram.
    pub fn mean(&self) -> f64 {
        let n = self.n();
        debug_assert!(n > 0, "mean of an empty histogram");
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * *c as f64)
            .sum();
        total / n as f64
    }
}

/// What the platform sees: counts of reported ratings plus the number of
/// silent raters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedHistogram {
    /// `counts[r - 1]` reported ratings equal to `r`.
    pub counts: Vec<u64>,
    /// Raters who did not report.
    pub n_u: u64,
}

impl ObservedHistogram {
    pub fn observed_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn n(&self) -> u64 {
        self.observed_total() + self.n_u
    }

    /// Empirical distribution of the reported ratings.
    pub fn empirical(&self) -> Result<EmpiricalDistribution, Error> {
        let total = self.observed_total();
        if total == 0 {
            return Err(Error::AllUnobserved);
        }
        Ok(EmpiricalDistribution {
            probs: self
                .counts
                .iter()
                .map(|c| *c as f64 / total as f64)
                .collect(),
        })
    }
}

/// A distribution over ratings estimated from reports. Unlike
/// [`CategoricalDistribution`] it may sit on the boundary of the simplex in
/// ways a modeled distribution never would (e.g. all mass on one rating), so
/// it is a separate type.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    probs: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Entries must be nonnegative and sum to 1 (within floating-point slack).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig(
                "empirical distribution must not be empty".into(),
            ));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "empirical entries must be finite and nonnegative, got {p}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > VALIDATION_EPS {
            return Err(Error::InvalidConfig(format!(
                "empirical entries must sum to 1, got {sum}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}
