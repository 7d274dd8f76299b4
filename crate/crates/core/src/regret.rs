//! Regret evaluation: exact multinomial enumeration, Monte Carlo estimation,
//! the matching worst-case lower bound, and grid searches for the worst
//! information structure inside several adversary families.
//!
//! Regret compares an aggregator against the ideal average of ALL ratings:
//! `R = E[(f(X̂) - μ)²] - E[(x̄ - μ)²]`, where the second term equals
//! `Var(p)/n` for i.i.d. ratings.

use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aggregator::{solve_a_star, AggregatorSpec};
use crate::error::Error;
use crate::model::{
    observed_marginal, CategoricalDistribution, EmpiricalDistribution, InformationStructure,
    ObservedHistogram, ParticipationProfile, RatingScale,
};
use crate::numeric::{for_each_composition, ln_outcome_count, LnFactorials};
use crate::sample::{simulate, RngSpec};

/// Exact enumeration refuses to visit more outcomes than this by default.
pub const DEFAULT_ENUM_CAP: f64 = 1e7;

/// Sample size for a regret query: a finite rater count, or the n → ∞ limit
/// in which only the empirical distribution of reports survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Finite(u64),
    Asymptotic,
}

impl SampleSize {
    pub fn finite(&self) -> Option<u64> {
        match self {
            SampleSize::Finite(n) => Some(*n),
            SampleSize::Asymptotic => None,
        }
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            SampleSize::Finite(n) => serializer.serialize_u64(*n),
            SampleSize::Asymptotic => serializer.serialize_str("asymptotic"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(n) => Ok(SampleSize::Finite(n)),
            Raw::Text(s) if s == "asymptotic" => Ok(SampleSize::Asymptotic),
            Raw::Text(s) => Err(D::Error::custom(format!(
                "expected a rater count or \"asymptotic\", got \"{s}\""
            ))),
        }
    }
}

/// One regret evaluation: an aggregator facing one information structure.
#[derive(Debug, Clone)]
pub struct RegretQuery {
    pub aggregator: AggregatorSpec,
    pub structure: InformationStructure,
    pub n: SampleSize,
}

/// Adversary families the worst-case search can sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Mass a on rating 1 (reported with probability q) and 1-a on rating m
    /// (always reported), plus the mirrored shape.
    #[serde(rename = "two-point")]
    TwoPointMonotone,
    /// Mass b on rating 1 and 1-b on rating m, everyone reporting with the
    /// floor probability q.
    #[serde(rename = "uniform-g")]
    TwoPointUniformG,
    /// Coarse grid over all of (p, g); small scales only.
    #[serde(rename = "general")]
    GeneralGrid,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::TwoPointMonotone => "two-point",
            Family::TwoPointUniformG => "uniform-g",
            Family::GeneralGrid => "general",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "two-point" => Ok(Family::TwoPointMonotone),
            "uniform-g" => Ok(Family::TwoPointUniformG),
            "general" => Ok(Family::GeneralGrid),
            other => Err(Error::InvalidConfig(format!(
                "unknown family '{other}' (expected two-point, uniform-g, or general)"
            ))),
        }
    }
}

/// Grid resolutions for the adversary families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Step of the a/b sweeps in the two-point families.
    pub step: f64,
    /// Simplex step for the general family's rating distribution.
    pub simplex_step: f64,
    /// Ladder step for the general family's report probabilities.
    pub g_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 1e-3,
            simplex_step: 0.1,
            g_step: 0.1,
        }
    }
}

/// How finite-n candidates are scored during a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    Exact { cap: f64 },
    MonteCarlo { trials: u64, seed: u64 },
}

impl Default for EvalMode {
    fn default() -> Self {
        EvalMode::Exact {
            cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// Outcome of a worst-case search; serializes to the run-report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRecord {
    pub aggregator: String,
    pub q: f64,
    pub n: SampleSize,
    pub family: Family,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    pub regret: f64,
    /// Human-readable description of the grid the search swept.
    pub grid: String,
}

/// The worst-case regret bound for (n, m, q) and the two-point mass a* that
/// witnesses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub a_star: f64,
}

/// `E[(x̄ - μ)²] = Var(p)/n`: the ideal aggregator's own squared error.
pub fn ideal_term(p: &CategoricalDistribution, n: u64) -> f64 {
    debug_assert!(n >= 1);
    p.variance() / n as f64
}

/// Exact expected squared loss `E[(f(X̂) - μ)²]`, by enumerating every
/// observed-histogram outcome of the (m+1)-bucket report marginal with
/// multinomial weights. Respects [`DEFAULT_ENUM_CAP`].
pub fn exact_loss(query: &RegretQuery) -> Result<f64, Error> {
    exact_loss_with_cap(query, DEFAULT_ENUM_CAP)
}

/// [`exact_loss`] with an explicit outcome cap.
pub fn exact_loss_with_cap(query: &RegretQuery, cap: f64) -> Result<f64, Error> {
    let n = finite_n(query)?;
    exact_loss_parts(&query.aggregator, &query.structure, n, cap)
}

fn finite_n(query: &RegretQuery) -> Result<u64, Error> {
    let n = query.n.finite().ok_or_else(|| {
        Error::InvalidConfig("exact evaluation needs a finite rater total".into())
    })?;
    if n < 1 {
        return Err(Error::InvalidConfig(
            "rater total must be at least 1".into(),
        ));
    }
    if let AggregatorSpec::Bea(params) = &query.aggregator {
        if params.n() != n {
            return Err(Error::InvalidConfig(format!(
                "aggregator was solved for n = {} but the query has n = {}",
                params.n(),
                n
            )));
        }
    }
    Ok(n)
}

fn exact_loss_parts(
    aggregator: &AggregatorSpec,
    theta: &InformationStructure,
    n: u64,
    cap: f64,
) -> Result<f64, Error> {
    let scale = theta.scale();
    let m = scale.m();
    // the cap is checked against the full (m+1)-bucket outcome count before
    // any table is allocated
    let ln_outcomes = ln_outcome_count(n, m);
    if ln_outcomes > cap.ln() {
        return Err(Error::EnumerationTooLarge {
            outcomes: ln_outcomes.exp(),
            cap,
        });
    }
    let w = observed_marginal(theta);
    let mu = theta.p().mean();
    // zero-probability buckets never receive a count: enumerate only the
    // active ones (two-point structures shrink from m+1 buckets to 3)
    let active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let ln_w: Vec<f64> = active.iter().map(|&i| w[i].ln()).collect();
    let lf = LnFactorials::up_to(n);

    let mut h = ObservedHistogram {
        counts: vec![0; m],
        n_u: 0,
    };
    let mut total = 0.0;
    let mut failure: Option<Error> = None;
    for_each_composition(n, active.len(), &mut |counts| {
        if failure.is_some() {
            return;
        }
        let mut ln_p = lf.ln_fact(n);
        for (j, &c) in counts.iter().enumerate() {
            ln_p -= lf.ln_fact(c);
            if c > 0 {
                ln_p += c as f64 * ln_w[j];
            }
        }
        h.counts.iter_mut().for_each(|c| *c = 0);
        h.n_u = 0;
        for (j, &c) in counts.iter().enumerate() {
            let bucket = active[j];
            if bucket < m {
                h.counts[bucket] = c;
            } else {
                h.n_u = c;
            }
        }
        match aggregator.apply_histogram(&h, scale) {
            Ok(f) => {
                let d = f - mu;
                total += ln_p.exp() * d * d;
            }
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Exact regret `exact_loss - Var(p)/n`. May be slightly negative for
/// benign structures; values are reported as-is.
pub fn exact_regret(query: &RegretQuery) -> Result<f64, Error> {
    exact_regret_with_cap(query, DEFAULT_ENUM_CAP)
}

/// [`exact_regret`] with an explicit outcome cap.
pub fn exact_regret_with_cap(query: &RegretQuery, cap: f64) -> Result<f64, Error> {
    let n = finite_n(query)?;
    let loss = exact_loss_parts(&query.aggregator, &query.structure, n, cap)?;
    Ok(loss - ideal_term(query.structure.p(), n))
}

/// Monte Carlo regret estimate: mean and standard error of the per-trial
/// quantity `(f(X̂) - μ)² - (x̄ - μ)²` over seeded independent trials.
///
/// Trial i draws from stream i of the seed; per-trial values are collected
/// in trial order and reduced sequentially, so the estimate is identical
/// across thread counts.
pub fn mc_regret(query: &RegretQuery, trials: u64, seed: u64) -> Result<(f64, f64), Error> {
    let n = finite_n(query)?;
    if trials < 1 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let theta = &query.structure;
    let scale = theta.scale();
    let mu = theta.p().mean();
    let values: Result<Vec<f64>, Error> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (full, observed) = simulate(
                theta,
                n,
                RngSpec {
                    seed,
                    stream: trial,
                },
            );
            let f = query.aggregator.apply_histogram(&observed, scale)?;
            let df = f - mu;
            let dx = full.mean() - mu;
            Ok(df * df - dx * dx)
        })
        .collect();
    let values = values?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok((mean, (var / trials as f64).sqrt()))
}

/// Worst-case regret lower bound: every aggregator's worst case over valid
/// information structures is at least `max_a J(a)`, attained in the limit by
/// the two-point structure pair at `a*`.
pub fn lower_bound(n: u64, scale: RatingScale, q: f64) -> LowerBound {
    let (a_star, value) = solve_a_star(n, scale, q);
    LowerBound { value, a_star }
}

/// Large-n worst-case regret of the polarizing-averaging aggregator:
/// `((m-1)(1-q) / (2(1+q)))²`.
pub fn asymptotic_paa_regret(scale: RatingScale, q: f64) -> f64 {
    let m = scale.m() as f64;
    let x = (m - 1.0) * (1.0 - q) / (2.0 * (1.0 + q));
    x * x
}

/// Mass a on rating 1 reported at the floor, mass 1-a on rating m always
/// reported.
pub fn two_point_low_hidden(scale: RatingScale, q: f64, a: f64) -> InformationStructure {
    let m = scale.m();
    let mut p = vec![0.0; m];
    p[0] = a;
    p[m - 1] = 1.0 - a;
    let mut g = vec![1.0; m];
    g[0] = q;
    InformationStructure::new(
        CategoricalDistribution::new(p).expect("two-point mass is a distribution"),
        ParticipationProfile::new(g, q).expect("profile respects the floor"),
    )
    .expect("matching dimensions")
}

/// Mirror image of [`two_point_low_hidden`]: mass a on rating m reported at
/// the floor, mass 1-a on rating 1 always reported.
pub fn two_point_high_hidden(scale: RatingScale, q: f64, a: f64) -> InformationStructure {
    let m = scale.m();
    let mut p = vec![0.0; m];
    p[0] = 1.0 - a;
    p[m - 1] = a;
    let mut g = vec![1.0; m];
    g[m - 1] = q;
    InformationStructure::new(
        CategoricalDistribution::new(p).expect("two-point mass is a distribution"),
        ParticipationProfile::new(g, q).expect("profile respects the floor"),
    )
    .expect("matching dimensions")
}

/// Two-point rating distribution with everyone reporting at the floor.
pub fn two_point_uniform_g(scale: RatingScale, q: f64, b: f64) -> InformationStructure {
    let m = scale.m();
    let mut p = vec![0.0; m];
    p[0] = b;
    p[m - 1] = 1.0 - b;
    InformationStructure::new(
        CategoricalDistribution::new(p).expect("two-point mass is a distribution"),
        ParticipationProfile::new(vec![q; m], q).expect("constant profile"),
    )
    .expect("matching dimensions")
}

/// The structure pair whose large-n regret for the polarizing-averaging
/// aggregator attains [`asymptotic_paa_regret`]: low-hidden and high-hidden
/// two-point structures at `a = 1/(q+1)`.
pub fn prop_worst_structures(
    scale: RatingScale,
    q: f64,
) -> (InformationStructure, InformationStructure) {
    let a = 1.0 / (q + 1.0);
    (
        two_point_low_hidden(scale, q, a),
        two_point_high_hidden(scale, q, a),
    )
}

/// Large-n loss `(f(p̂) - μ)²`, with `p̂` the exact normalized report
/// marginal. The best-response aggregator is rejected (finite n only).
pub fn asymptotic_loss(
    aggregator: &AggregatorSpec,
    theta: &InformationStructure,
) -> Result<f64, Error> {
    let scale = theta.scale();
    let m = scale.m();
    let w = observed_marginal(theta);
    let total: f64 = w[..m].iter().sum();
    if total <= 0.0 {
        // impossible while q > 0; kept as a checked error
        return Err(Error::NoReports);
    }
    let phat = EmpiricalDistribution::from_probs(w[..m].iter().map(|x| x / total).collect())?;
    let f = aggregator.apply_empirical(&phat, scale)?;
    let d = f - theta.p().mean();
    Ok(d * d)
}

/// Sweep one adversary family and return the structure that maximizes the
/// aggregator's regret (exact or Monte Carlo for finite n, limiting loss for
/// the asymptotic regime). Ties keep the earliest grid point, so results are
/// deterministic.
pub fn adversary_search(
    aggregator: &AggregatorSpec,
    n: SampleSize,
    scale: RatingScale,
    q: f64,
    family: Family,
    grid: GridSpec,
    mode: EvalMode,
) -> Result<WorstCaseRecord, Error> {
    if matches!(aggregator, AggregatorSpec::Bea(_)) && n.finite().is_none() {
        return Err(Error::InvalidConfig(
            "the best-response aggregator needs a finite rater total".into(),
        ));
    }
    let candidates = family_candidates(family, scale, q, &grid)?;
    let values: Result<Vec<f64>, Error> = candidates
        .par_iter()
        .map(|theta| evaluate(aggregator, theta, n, mode))
        .collect();
    let values = values?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let theta = &candidates[best];
    Ok(WorstCaseRecord {
        aggregator: aggregator.name().to_string(),
        q,
        n,
        family,
        p: theta.p().probs().to_vec(),
        g: theta.g().g().to_vec(),
        regret: values[best],
        grid: grid_meta(family, &grid),
    })
}

/// [`adversary_search`] over several families, keeping the overall worst
/// record (ties keep the earliest family).
pub fn worst_over_families(
    aggregator: &AggregatorSpec,
    n: SampleSize,
    scale: RatingScale,
    q: f64,
    families: &[Family],
    grid: GridSpec,
    mode: EvalMode,
) -> Result<WorstCaseRecord, Error> {
    if families.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one adversary family is required".into(),
        ));
    }
    let mut best: Option<WorstCaseRecord> = None;
    for &family in families {
        let record = adversary_search(aggregator, n, scale, q, family, grid, mode)?;
        best = match best {
            Some(b) if record.regret > b.regret => Some(record),
            Some(b) => Some(b),
            None => Some(record),
        };
    }
    Ok(best.expect("nonempty families"))
}

fn evaluate(
    aggregator: &AggregatorSpec,
    theta: &InformationStructure,
    n: SampleSize,
    mode: EvalMode,
) -> Result<f64, Error> {
    match n {
        SampleSize::Asymptotic => asymptotic_loss(aggregator, theta),
        SampleSize::Finite(count) => match mode {
            EvalMode::Exact { cap } => {
                let loss = exact_loss_parts(aggregator, theta, count, cap)?;
                Ok(loss - ideal_term(theta.p(), count))
            }
            EvalMode::MonteCarlo { trials, seed } => {
                let query = RegretQuery {
                    aggregator: aggregator.clone(),
                    structure: theta.clone(),
                    n: SampleSize::Finite(count),
                };
                Ok(mc_regret(&query, trials, seed)?.0)
            }
        },
    }
}

fn family_candidates(
    family: Family,
    scale: RatingScale,
    q: f64,
    grid: &GridSpec,
) -> Result<Vec<InformationStructure>, Error> {
    if !(grid.step > 0.0 && grid.step <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "grid step must lie in (0, 1], got {}",
            grid.step
        )));
    }
    match family {
        Family::TwoPointMonotone => {
            let steps = (1.0 / grid.step).round().max(1.0) as u64;
            let mut out = Vec::with_capacity(2 * (steps as usize + 1));
            for i in 0..=steps {
                let a = i as f64 / steps as f64;
                out.push(two_point_low_hidden(scale, q, a));
                out.push(two_point_high_hidden(scale, q, a));
            }
            Ok(out)
        }
        Family::TwoPointUniformG => {
            let steps = (1.0 / grid.step).round().max(1.0) as u64;
            let mut out = Vec::with_capacity(steps as usize + 1);
            for i in 0..=steps {
                out.push(two_point_uniform_g(scale, q, i as f64 / steps as f64));
            }
            Ok(out)
        }
        Family::GeneralGrid => general_candidates(scale, q, grid),
    }
}

fn general_candidates(
    scale: RatingScale,
    q: f64,
    grid: &GridSpec,
) -> Result<Vec<InformationStructure>, Error> {
    let m = scale.m();
    if m > 3 {
        return Err(Error::InvalidConfig(format!(
            "the general family sweeps a full (p, g) grid and supports m <= 3, got m = {m}"
        )));
    }
    let denom = (1.0 / grid.simplex_step).round().max(1.0) as u64;
    // report-probability ladder: q, q + step, ... and always exactly 1
    let mut ladder = Vec::new();
    let mut x = q;
    while x < 1.0 - 1e-12 {
        ladder.push(x);
        x += grid.g_step;
    }
    ladder.push(1.0);

    let mut distributions = Vec::new();
    for_each_composition(denom, m, &mut |counts| {
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / denom as f64).collect();
        distributions.push(CategoricalDistribution::new(p).expect("simplex grid point"));
    });

    let mut out = Vec::with_capacity(distributions.len() * ladder.len().pow(m as u32));
    let mut g = vec![0.0; m];
    for p in &distributions {
        push_g_combos(&mut out, p, &ladder, &mut g, 0, q);
    }
    Ok(out)
}

fn push_g_combos(
    out: &mut Vec<InformationStructure>,
    p: &CategoricalDistribution,
    ladder: &[f64],
    g: &mut Vec<f64>,
    idx: usize,
    q: f64,
) {
    if idx == g.len() {
        out.push(
            InformationStructure::new(
                p.clone(),
                ParticipationProfile::new(g.clone(), q).expect("ladder respects the floor"),
            )
            .expect("matching dimensions"),
        );
        return;
    }
    for &v in ladder {
        g[idx] = v;
        push_g_combos(out, p, ladder, g, idx + 1, q);
    }
}

fn grid_meta(family: Family, grid: &GridSpec) -> String {
    match family {
        Family::TwoPointMonotone => format!("a-step {}", grid.step),
        Family::TwoPointUniformG => format!("b-step {}", grid.step),
        Family::GeneralGrid => {
            format!("simplex-step {}, g-step {}", grid.simplex_step, grid.g_step)
        }
    }
}
