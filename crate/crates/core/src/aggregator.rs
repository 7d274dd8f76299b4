//! The aggregators: simple average, a root-mean-square baseline, a
//! best-response aggregator for a known rater count ("bea"), and a
//! polarizing-averaging aggregator for an unknown rater count ("paa").
//!
//! Every aggregator maps what the platform sees — reported rating counts,
//! plus (for bea) the number of silent raters — to an estimate of the true
//! mean rating in `[1, m]`.

use crate::error::Error;
use crate::model::{EmpiricalDistribution, ObservedHistogram, RatingScale};
use crate::numeric::LnFactorials;

/// Precomputed inputs for [`bea`]: the rater total, the participation floor,
/// and the witness parameter `a*` of the hardest two-point structure pair.
///
/// `a*` depends only on `(n, m, q)`, so solving it once and reusing the
/// params across histograms is both correct and cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaParams {
    n: u64,
    q: f64,
    a_star: f64,
}

impl BeaParams {
    /// Solve for `a*` by maximizing [`bea_objective`] over `[0, 1]`.
    pub fn solve(n: u64, scale: RatingScale, q: f64) -> Result<Self, Error> {
        Self::validate(n, q)?;
        let (a_star, _) = solve_a_star(n, scale, q);
        Ok(Self { n, q, a_star })
    }

    /// Use a caller-supplied `a*` instead of solving for it.
    pub fn with_a_star(n: u64, q: f64, a_star: f64) -> Result<Self, Error> {
        Self::validate(n, q)?;
        if !(0.0..=1.0).contains(&a_star) {
            return Err(Error::InvalidConfig(format!(
                "a* must lie in [0, 1], got {a_star}"
            )));
        }
        Ok(Self { n, q, a_star })
    }

    fn validate(n: u64, q: f64) -> Result<(), Error> {
        if n < 1 {
            return Err(Error::InvalidConfig(
                "the best-response aggregator needs a rater total n >= 1".into(),
            ));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "participation floor must satisfy 0 < q <= 1, got {q}"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }
}

/// The two extreme means consistent with the reports, plus the thresholds
/// that produce them.
///
/// Up to floating-point roundoff: `k1 <= k2`, `1 <= l <= u <= m`,
/// `k1 <= l <= k1 + 1`, and `k2 <= u <= k2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaaBounds {
    /// Threshold below which ratings are assumed under-reported for the
    /// lowest consistent mean.
    pub k1: usize,
    /// Threshold at or below which ratings are assumed fully reported for
    /// the highest consistent mean.
    pub k2: usize,
    /// Lowest mean any admissible participation profile could explain.
    pub l: f64,
    /// Highest such mean.
    pub u: f64,
}

/// Plain average of the reported ratings; scale midpoint when nothing was
/// reported.
pub fn simple_average(h: &ObservedHistogram, scale: RatingScale) -> f64 {
    debug_assert_eq!(h.counts.len(), scale.m());
    let total = h.observed_total();
    if total == 0 {
        return scale.midpoint();
    }
    let weighted: f64 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * *c as f64)
        .sum();
    weighted / total as f64
}

/// Root-mean-square of the reported ratings (`sqrt(Σ r² n_r / Σ n_r)`);
/// scale midpoint when nothing was reported.
pub fn spectral(h: &ObservedHistogram, scale: RatingScale) -> f64 {
    debug_assert_eq!(h.counts.len(), scale.m());
    let total = h.observed_total();
    if total == 0 {
        return scale.midpoint();
    }
    let weighted: f64 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = (i + 1) as f64;
            r * r * *c as f64
        })
        .sum();
    (weighted / total as f64).sqrt()
}

/// Root-mean-square under a limiting empirical distribution.
fn spectral_empirical(phat: &EmpiricalDistribution) -> f64 {
    phat.probs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let r = (i + 1) as f64;
            r * r * p
        })
        .sum::<f64>()
        .sqrt()
}

/// Posterior weight that the silent raters hold the LOW rating, given the
/// report-count gap `d = n_1 - n_m` between the extreme ratings:
/// `α = (a*q)^d / ((a*q)^d + (1-a*)^d)`.
///
/// Computed as `1 / (1 + β^d)` with `β = (1-a*)/(a*q)`, which is exact for
/// `d = 0` and inherits the correct limits at `a* ∈ {0, 1}` from IEEE
/// division and powers (β becomes ∞ or 0, and β^d then yields 0, 1, or ∞ as
/// the sign of d dictates). Both bases cannot vanish at once because q > 0.
pub fn bea_alpha(n1: u64, nm: u64, a_star: f64, q: f64) -> f64 {
    alpha_from_gap(n1 as i64 - nm as i64, a_star, q)
}

fn alpha_from_gap(d: i64, a_star: f64, q: f64) -> f64 {
    if d == 0 {
        return 0.5;
    }
    let low = a_star * q;
    let high = 1.0 - a_star;
    debug_assert!(low > 0.0 || high > 0.0);
    let beta = high / low;
    // |d| <= n in practice; the clamp only guards the i32 cast, and any
    // exponent this large already saturates β^d to 0 or ∞.
    let e = d.clamp(-(1 << 30), 1 << 30) as i32;
    1.0 / (1.0 + beta.powi(e))
}

/// Expected squared error of the best response against the two-point
/// structure pair with low-rating mass `a`:
/// `J(a) = Σ_{s,t≥0, s+t≤n} C(n,t) C(n-t,s) a^{n-t} (1-a)^t q^s (1-q)^{n-s-t}
/// · ((n-s-t)(m-1)(1-α_a(s-t)) / n)²`.
///
/// Here `t` raters hold the top rating (always reported), `s` of the
/// low-rating raters report, and `n-s-t` stay silent. Terms with nothing to
/// impute (`n-s-t = 0`) contribute nothing; `x^0 = 1` even at `x = 0`.
pub fn bea_objective(a: f64, n: u64, scale: RatingScale, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&a));
    debug_assert!(q > 0.0 && q <= 1.0);
    let m = scale.m() as f64;
    let lf = LnFactorials::up_to(n);
    let mut total = 0.0;
    for t in 0..=n {
        for s in 0..=(n - t) {
            let u = n - s - t;
            if u == 0 {
                continue;
            }
            let mut ln_w = lf.ln_multinomial(n, &[s, t, u]);
            let mut impossible = false;
            for (base, exp) in [(a, n - t), (1.0 - a, t), (q, s), (1.0 - q, u)] {
                if exp == 0 {
                    continue;
                }
                if base <= 0.0 {
                    impossible = true;
                    break;
                }
                ln_w += exp as f64 * base.ln();
            }
            if impossible {
                continue;
            }
            let alpha = alpha_from_gap(s as i64 - t as i64, a, q);
            let err = u as f64 * (m - 1.0) * (1.0 - alpha) / n as f64;
            total += ln_w.exp() * err * err;
        }
    }
    total
}

/// Maximize [`bea_objective`] over `a ∈ [0, 1]`: a uniform grid with step
/// 1e-3 (ties keep the smallest `a` — the objective is not known to be
/// concave), then golden-section refinement on the best cell's neighborhood.
/// Returns `(a*, J(a*))`.
pub fn solve_a_star(n: u64, scale: RatingScale, q: f64) -> (f64, f64) {
    debug_assert!(n >= 1);
    const STEPS: u64 = 1000;
    let eval = |a: f64| bea_objective(a, n, scale, q);

    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=STEPS {
        let v = eval(i as f64 / STEPS as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }

    let mut lo = (best_i as f64 - 1.0).max(0.0) / STEPS as f64;
    let mut hi = ((best_i + 1) as f64).min(STEPS as f64) / STEPS as f64;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        }
    }
    let a = 0.5 * (lo + hi);
    let v = eval(a);
    // refinement must never lose to a grid point it started from
    if v >= best_v {
        (a, v)
    } else {
        (best_i as f64 / STEPS as f64, best_v)
    }
}

/// Best-response aggregator for a known rater total: reported ratings enter
/// at face value and each silent rater is imputed the mean
/// `μ̂_u = α·1 + (1-α)·m` of a two-point posterior with weight
/// `α = bea_alpha(n_1, n_m, a*, q)`.
pub fn bea(h: &ObservedHistogram, params: &BeaParams, scale: RatingScale) -> Result<f64, Error> {
    let m = scale.m();
    debug_assert_eq!(h.counts.len(), m);
    let observed = h.observed_total();
    if observed + h.n_u != params.n {
        return Err(Error::InconsistentCounts(format!(
            "histogram has {} reports plus {} silent raters, but the aggregator was solved for n = {}",
            observed, h.n_u, params.n
        )));
    }
    let alpha = bea_alpha(h.counts[0], h.counts[m - 1], params.a_star, params.q);
    let mu_u = m as f64 - (m as f64 - 1.0) * alpha;
    let reported: f64 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * *c as f64)
        .sum();
    Ok((reported + h.n_u as f64 * mu_u) / params.n as f64)
}

/// Margin of the lowest-mean threshold condition at k:
/// `Σ_{i<k} (i-k) p̂_i / q + Σ_{i>k} (i-k) p̂_i`.
fn k1_margin(probs: &[f64], q: f64, k: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let r = i + 1;
            let gap = r as f64 - k as f64;
            if r < k {
                gap * pi / q
            } else if r > k {
                gap * pi
            } else {
                0.0
            }
        })
        .sum()
}

/// Margin of the highest-mean threshold condition at k:
/// `Σ_{i<k} (i-k) p̂_i + Σ_{i>k} (i-k) p̂_i / q`.
fn k2_margin(probs: &[f64], q: f64, k: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let r = i + 1;
            let gap = r as f64 - k as f64;
            if r < k {
                gap * pi
            } else if r > k {
                gap * pi / q
            } else {
                0.0
            }
        })
        .sum()
}

/// Largest threshold `k ∈ [1, m]` whose low-side margin is still
/// nonnegative. `k = 1` always qualifies, so a result always exists.
pub fn paa_k1(phat: &EmpiricalDistribution, q: f64) -> usize {
    let probs = phat.probs();
    (1..=probs.len())
        .filter(|&k| k1_margin(probs, q, k) >= 0.0)
        .max()
        .unwrap_or(1)
}

/// Largest threshold `k ∈ [1, m]` whose high-side margin is still
/// nonnegative.
pub fn paa_k2(phat: &EmpiricalDistribution, q: f64) -> usize {
    let probs = phat.probs();
    (1..=probs.len())
        .filter(|&k| k2_margin(probs, q, k) >= 0.0)
        .max()
        .unwrap_or(1)
}

/// Mean after multiplying the weight of every rating OUTSIDE `keep_full`
/// by q. The denominator is at least `q > 0`, so this is always defined.
fn reweighted_mean(probs: &[f64], q: f64, keep_full: impl Fn(usize) -> bool) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &pi) in probs.iter().enumerate() {
        let r = i + 1;
        let w = if keep_full(r) { pi } else { q * pi };
        num += r as f64 * w;
        den += w;
    }
    num / den
}

/// The extreme means consistent with the reports: the reports themselves are
/// fixed, but silent raters may hide anywhere the participation floor
/// allows, so the true mean can sit anywhere in `[l, u]`.
pub fn paa_bounds(phat: &EmpiricalDistribution, q: f64, scale: RatingScale) -> PaaBounds {
    debug_assert_eq!(phat.m(), scale.m());
    let probs = phat.probs();
    let k1 = paa_k1(phat, q);
    let k2 = paa_k2(phat, q);
    // l: ratings above k1 are assumed over-represented (their holders all
    // reported), so their weight shrinks by q; u mirrors below k2.
    let l = reweighted_mean(probs, q, |r| r <= k1);
    let u = reweighted_mean(probs, q, |r| r > k2);
    PaaBounds { k1, k2, l, u }
}

/// Polarizing-averaging aggregator: the midpoint `(l + u) / 2` of the
/// extreme means consistent with the reports. Needs no rater total.
pub fn paa(phat: &EmpiricalDistribution, q: f64, scale: RatingScale) -> f64 {
    let bounds = paa_bounds(phat, q, scale);
    0.5 * (bounds.l + bounds.u)
}

/// A chosen aggregator with everything it needs to score a histogram.
#[derive(Debug, Clone, PartialEq)]
pub enum AggregatorSpec {
    /// Plain average of reported ratings.
    Avg,
    /// Root-mean-square baseline.
    Spe,
    /// Best-response aggregator (needs the rater total).
    Bea(BeaParams),
    /// Polarizing-averaging aggregator.
    Paa { q: f64 },
}

impl AggregatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorSpec::Avg => "avg",
            AggregatorSpec::Spe => "spe",
            AggregatorSpec::Bea(_) => "bea",
            AggregatorSpec::Paa { .. } => "paa",
        }
    }

    /// Score an observed histogram. Aggregators that only consume the
    /// empirical distribution fall back to the scale midpoint when nothing
    /// was reported.
    pub fn apply_histogram(&self, h: &ObservedHistogram, scale: RatingScale) -> Result<f64, Error> {
        match self {
            AggregatorSpec::Avg => Ok(simple_average(h, scale)),
            AggregatorSpec::Spe => Ok(spectral(h, scale)),
            AggregatorSpec::Bea(params) => bea(h, params, scale),
            AggregatorSpec::Paa { q } => Ok(match h.empirical() {
                Ok(phat) => paa(&phat, *q, scale),
                Err(_) => scale.midpoint(),
            }),
        }
    }

    /// Score a limiting empirical distribution (the large-n regime, where
    /// per-rater counts no longer exist). The best-response aggregator is
    /// defined only for a finite rater total and is rejected here.
    pub fn apply_empirical(
        &self,
        phat: &EmpiricalDistribution,
        scale: RatingScale,
    ) -> Result<f64, Error> {
        match self {
            AggregatorSpec::Avg => Ok(phat.mean()),
            AggregatorSpec::Spe => Ok(spectral_empirical(phat)),
            AggregatorSpec::Bea(_) => Err(Error::InvalidConfig(
                "the best-response aggregator needs a finite rater total".into(),
            )),
            AggregatorSpec::Paa { q } => Ok(paa(phat, *q, scale)),
        }
    }
}
