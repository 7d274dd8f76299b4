//! Command-line front end: histogram scoring, worst-case curves, the
//! lower bound, adversary search, panel simulation, and a self-test.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::aggregator::{AggregatorSpec, BeaParams};
use crate::error::Error;
use crate::io::{
    build_histogram, read_ratings_csv, render_svg_line_chart, write_curve_csv, write_report_json,
    CurvePoint,
};
use crate::model::{
    CategoricalDistribution, InformationStructure, ObservedHistogram, ParticipationProfile,
    RatingScale,
};
use crate::regret::{
    adversary_search, asymptotic_loss, asymptotic_paa_regret, exact_loss, exact_regret,
    lower_bound, prop_worst_structures, worst_over_families, EvalMode, Family, GridSpec,
    RegretQuery, SampleSize,
};
use crate::sample::{simulate, RngSpec};

#[derive(Parser)]
#[command(
    name = "robust-rating",
    version,
    about = "Bias-robust rating aggregation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score an observed histogram or a CSV of individual ratings
    Aggregate(AggregateArgs),
    /// Sweep q and tabulate each aggregator's worst-case regret
    Curve(CurveArgs),
    /// Worst-case regret lower bound for a given panel
    LowerBound(LowerBoundArgs),
    /// Search adversary families for the regret-maximizing structure
    WorstCase(WorstCaseArgs),
    /// Draw a synthetic panel and report full vs observed counts
    Simulate(SimulateArgs),
    /// Run fast end-to-end consistency checks
    Selftest,
}

#[derive(Args)]
struct AggregateArgs {
    /// Number of rating categories
    #[arg(long)]
    m: usize,
    /// Observed counts per rating, lowest first, e.g. 2,1
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    counts: Option<Vec<u64>>,
    /// CSV file of individual ratings
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column holding the rating
    #[arg(long, default_value = "rating")]
    column: String,
    /// Compress raw 1-10 ratings onto the 1-7 scale
    #[arg(long)]
    remap: bool,
    /// True rater total, observed plus silent
    #[arg(long)]
    n: Option<u64>,
    /// Participation floor
    #[arg(long)]
    q: Option<f64>,
    /// Aggregators to run (avg, spe, bea, paa), e.g. avg,bea
    #[arg(long, value_delimiter = ',')]
    aggregators: Option<Vec<String>>,
    /// Report-mass parameter for bea, replacing the solved value
    #[arg(long)]
    a_star: Option<f64>,
    /// Also write the scores as a JSON map
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// Number of rating categories
    #[arg(long)]
    m: usize,
    /// q values as start:stop:step, e.g. 0.1:0.9:0.1
    #[arg(long)]
    q_grid: String,
    /// Rater total per panel
    #[arg(long, conflicts_with = "asymptotic")]
    n: Option<u64>,
    /// Large-panel limit instead of a finite total
    #[arg(long)]
    asymptotic: bool,
    /// Aggregators to sweep, e.g. avg,bea
    #[arg(long, value_delimiter = ',')]
    aggregators: Option<Vec<String>>,
    /// Adversary families (two-point, uniform-g, general, or all)
    #[arg(
        long = "family",
        value_delimiter = ',',
        default_value = "two-point,uniform-g"
    )]
    family: Vec<String>,
    /// Mixture-weight step for the two-point families
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Estimate regret by Monte Carlo with this many trials
    #[arg(long)]
    trials: Option<u64>,
    /// Seed for Monte Carlo estimation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also render the curves as an SVG chart
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct LowerBoundArgs {
    /// Rater total
    #[arg(long)]
    n: u64,
    /// Number of rating categories
    #[arg(long)]
    m: usize,
    /// Participation floor
    #[arg(long)]
    q: f64,
}

#[derive(Args)]
struct WorstCaseArgs {
    /// Aggregator to attack (avg, spe, bea, paa)
    #[arg(long)]
    aggregator: String,
    /// Number of rating categories
    #[arg(long)]
    m: usize,
    /// Participation floor
    #[arg(long)]
    q: f64,
    /// Rater total per panel
    #[arg(long, conflicts_with = "asymptotic")]
    n: Option<u64>,
    /// Large-panel limit instead of a finite total
    #[arg(long)]
    asymptotic: bool,
    /// Adversary families (two-point, uniform-g, general, or all)
    #[arg(
        long = "family",
        value_delimiter = ',',
        default_value = "two-point,uniform-g"
    )]
    family: Vec<String>,
    /// Mixture-weight step for the two-point families
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Estimate regret by Monte Carlo with this many trials
    #[arg(long)]
    trials: Option<u64>,
    /// Seed for Monte Carlo estimation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report-mass parameter for bea, replacing the solved value
    #[arg(long)]
    a_star: Option<f64>,
    /// JSON output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Rating probabilities, lowest first (normalized by their sum)
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Per-rating report probabilities
    #[arg(long, value_delimiter = ',')]
    g: Vec<f64>,
    /// Participation floor (defaults to the smallest report probability)
    #[arg(long)]
    q: Option<f64>,
    /// Rater total
    #[arg(long)]
    n: u64,
    /// Seed for the draw
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parse the command line and run the selected subcommand.
pub fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Aggregate(args) => run_aggregate(args),
        Command::Curve(args) => run_curve(args),
        Command::LowerBound(args) => run_lower_bound(args),
        Command::WorstCase(args) => run_worst_case(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Selftest => run_selftest(),
    }
}

/// Process exit code for an error: 2 for unusable configuration, 3 for a
/// computation that refused to produce a result, 4 for I/O and data issues.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::InconsistentCounts(_) | Error::BadTotal { .. } => 2,
        Error::EnumerationTooLarge { .. }
        | Error::SelftestFailed(_)
        | Error::NoReports
        | Error::AllUnobserved => 3,
        Error::Io(_) | Error::Parse { .. } | Error::OutOfRange { .. } | Error::BadScale { .. } => 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AggKind {
    Avg,
    Spe,
    Bea,
    Paa,
}

fn agg_kind(name: &str) -> Result<AggKind, Error> {
    match name {
        "avg" => Ok(AggKind::Avg),
        "spe" => Ok(AggKind::Spe),
        "bea" => Ok(AggKind::Bea),
        "paa" => Ok(AggKind::Paa),
        other => Err(Error::InvalidConfig(format!(
            "unknown aggregator '{other}'"
        ))),
    }
}

fn make_spec(
    kind: AggKind,
    q: Option<f64>,
    n: Option<u64>,
    a_star: Option<f64>,
    scale: RatingScale,
) -> Result<AggregatorSpec, Error> {
    match kind {
        AggKind::Avg => Ok(AggregatorSpec::Avg),
        AggKind::Spe => Ok(AggregatorSpec::Spe),
        AggKind::Paa => {
            let q = q.ok_or_else(|| Error::InvalidConfig("paa needs --q".into()))?;
            Ok(AggregatorSpec::Paa { q })
        }
        AggKind::Bea => {
            let q = q.ok_or_else(|| Error::InvalidConfig("bea needs --q".into()))?;
            let n = n.ok_or_else(|| {
                Error::InvalidConfig("bea needs a finite rater total (--n)".into())
            })?;
            let params = match a_star {
                Some(a) => BeaParams::with_a_star(n, q, a)?,
                None => BeaParams::solve(n, scale, q)?,
            };
            Ok(AggregatorSpec::Bea(params))
        }
    }
}

fn check_q(q: f64) -> Result<(), Error> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "--q must lie in (0, 1], got {q}"
        )))
    }
}

fn parse_families(raw: &[String]) -> Result<Vec<Family>, Error> {
    let mut expanded = Vec::new();
    for name in raw {
        if name == "all" {
            expanded.extend([
                Family::TwoPointMonotone,
                Family::TwoPointUniformG,
                Family::GeneralGrid,
            ]);
        } else {
            expanded.push(name.parse()?);
        }
    }
    let mut families: Vec<Family> = Vec::new();
    for f in expanded {
        if !families.contains(&f) {
            families.push(f);
        }
    }
    if families.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one adversary family is required".into(),
        ));
    }
    Ok(families)
}

fn parse_q_grid(text: &str) -> Result<Vec<f64>, Error> {
    let malformed =
        || Error::InvalidConfig(format!("--q-grid wants start:stop:step, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(malformed());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.trim().parse().map_err(|_| malformed()))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start > 0.0 && start <= stop && stop <= 1.0 + 1e-12 && step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "--q-grid needs 0 < start <= stop <= 1 and step > 0, got '{text}'"
        )));
    }
    let mut qs = Vec::new();
    let mut k = 0u32;
    loop {
        let x = start + f64::from(k) * step;
        if x > stop + step * 1e-6 {
            break;
        }
        // snap accumulated float error so grid points print cleanly
        qs.push(((x * 1e12).round() / 1e12).min(1.0));
        k += 1;
    }
    Ok(qs)
}

fn sample_size(n: Option<u64>, asymptotic: bool) -> Result<SampleSize, Error> {
    match (n, asymptotic) {
        (Some(0), _) => Err(Error::InvalidConfig("--n must be at least 1".into())),
        (Some(n), false) => Ok(SampleSize::Finite(n)),
        (None, true) => Ok(SampleSize::Asymptotic),
        _ => Err(Error::InvalidConfig(
            "provide exactly one of --n or --asymptotic".into(),
        )),
    }
}

fn eval_mode(trials: Option<u64>, seed: u64) -> Result<EvalMode, Error> {
    match trials {
        Some(0) => Err(Error::InvalidConfig("--trials must be at least 1".into())),
        Some(trials) => Ok(EvalMode::MonteCarlo { trials, seed }),
        None => Ok(EvalMode::default()),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    })
}

fn run_aggregate(args: AggregateArgs) -> Result<(), Error> {
    let scale = RatingScale::new(args.m)?;
    if let Some(q) = args.q {
        check_q(q)?;
    }
    let histogram = match (&args.counts, &args.input) {
        (Some(counts), None) => {
            if counts.len() != scale.m() {
                return Err(Error::InvalidConfig(format!(
                    "--counts needs {} entries, got {}",
                    scale.m(),
                    counts.len()
                )));
            }
            let observed: u64 = counts.iter().sum();
            let n_u = match args.n {
                Some(n) if n < observed => return Err(Error::BadTotal { n, count: observed }),
                Some(n) => n - observed,
                None => 0,
            };
            ObservedHistogram {
                counts: counts.clone(),
                n_u,
            }
        }
        (None, Some(path)) => {
            let records = read_ratings_csv(path, &args.column, args.remap)?;
            build_histogram(&records, scale, args.n)?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "provide exactly one of --counts or --input".into(),
            ))
        }
    };
    let kinds = match &args.aggregators {
        Some(names) => names
            .iter()
            .map(|s| agg_kind(s))
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            let mut kinds = vec![AggKind::Avg, AggKind::Spe];
            if args.q.is_some() {
                if args.n.is_some() {
                    kinds.push(AggKind::Bea);
                }
                kinds.push(AggKind::Paa);
            }
            kinds
        }
    };
    let mut scores = BTreeMap::new();
    for kind in kinds {
        let spec = make_spec(kind, args.q, args.n, args.a_star, scale)?;
        let value = spec.apply_histogram(&histogram, scale)?;
        println!("{} {:.6}", spec.name(), value);
        scores.insert(spec.name().to_string(), value);
    }
    if let Some(path) = &args.output {
        let mut file = File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &scores)
            .map_err(|e| Error::Io(io::Error::other(e)))?;
        writeln!(file)?;
    }
    Ok(())
}

fn run_curve(args: CurveArgs) -> Result<(), Error> {
    let scale = RatingScale::new(args.m)?;
    let qs = parse_q_grid(&args.q_grid)?;
    let n = sample_size(args.n, args.asymptotic)?;
    let families = parse_families(&args.family)?;
    let grid = GridSpec {
        step: args.grid_step,
        ..GridSpec::default()
    };
    let mode = eval_mode(args.trials, args.seed)?;
    let kinds = match &args.aggregators {
        Some(names) => names
            .iter()
            .map(|s| agg_kind(s))
            .collect::<Result<Vec<_>, _>>()?,
        None => match n {
            SampleSize::Finite(_) => {
                vec![AggKind::Avg, AggKind::Spe, AggKind::Bea, AggKind::Paa]
            }
            SampleSize::Asymptotic => vec![AggKind::Avg, AggKind::Spe, AggKind::Paa],
        },
    };
    let mut points = Vec::new();
    for &q in &qs {
        for &kind in &kinds {
            let spec = make_spec(kind, Some(q), n.finite(), None, scale)?;
            let record = worst_over_families(&spec, n, scale, q, &families, grid, mode)?;
            points.push(CurvePoint::new(q, record.aggregator, record.regret));
        }
        if let SampleSize::Finite(count) = n {
            let lb = lower_bound(count, scale, q);
            points.push(CurvePoint::new(q, "lower_bound", lb.value));
        }
    }
    let mut out = open_output(args.output.as_deref())?;
    write_curve_csv(&points, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.svg {
        let mut file = File::create(path)?;
        render_svg_line_chart(&points, &mut file)?;
    }
    Ok(())
}

fn run_lower_bound(args: LowerBoundArgs) -> Result<(), Error> {
    check_q(args.q)?;
    if args.n == 0 {
        return Err(Error::InvalidConfig("--n must be at least 1".into()));
    }
    let scale = RatingScale::new(args.m)?;
    let lb = lower_bound(args.n, scale, args.q);
    println!("value={:.6} a*={:.3}", lb.value, lb.a_star);
    Ok(())
}

fn run_worst_case(args: WorstCaseArgs) -> Result<(), Error> {
    check_q(args.q)?;
    let scale = RatingScale::new(args.m)?;
    let n = sample_size(args.n, args.asymptotic)?;
    let families = parse_families(&args.family)?;
    let grid = GridSpec {
        step: args.grid_step,
        ..GridSpec::default()
    };
    let mode = eval_mode(args.trials, args.seed)?;
    let kind = agg_kind(&args.aggregator)?;
    let spec = make_spec(kind, Some(args.q), n.finite(), args.a_star, scale)?;
    let record = worst_over_families(&spec, n, scale, args.q, &families, grid, mode)?;
    let mut out = open_output(args.output.as_deref())?;
    write_report_json(&record, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let total: f64 = args.p.iter().sum();
    if args.p.iter().any(|x| !x.is_finite() || *x < 0.0) || total <= 0.0 {
        return Err(Error::InvalidConfig(
            "--p needs nonnegative weights with a positive sum".into(),
        ));
    }
    let probs: Vec<f64> = args.p.iter().map(|x| x / total).collect();
    let p = CategoricalDistribution::new(probs)?;
    let q = args
        .q
        .unwrap_or_else(|| args.g.iter().copied().fold(f64::INFINITY, f64::min));
    let profile = ParticipationProfile::new(args.g.clone(), q)?;
    let theta = InformationStructure::new(p, profile)?;
    let (full, observed) = simulate(
        &theta,
        args.n,
        RngSpec {
            seed: args.seed,
            stream: 0,
        },
    );
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "rating,full_count,observed_count")?;
    for r in 1..=full.counts.len() {
        writeln!(
            out,
            "{},{},{}",
            r,
            full.counts[r - 1],
            observed.counts[r - 1]
        )?;
    }
    // silent raters: their true ratings are unknown, so no full-count split
    writeln!(out, "0,,{}", observed.n_u)?;
    out.flush()?;
    Ok(())
}

type SelftestCheck = fn() -> Result<(), String>;

fn run_selftest() -> Result<(), Error> {
    let checks: [(&str, SelftestCheck); 6] = [
        ("closed-form worst pair", selftest_closed_form_pair),
        ("asymptotic two-point sweep", selftest_asymptotic_sweep),
        (
            "full participation collapses paa to avg",
            selftest_paa_collapse,
        ),
        ("scale reversal symmetry", selftest_reversal),
        ("selective silence drags the observed mean", selftest_drift),
        ("exact single-rater loss", selftest_exact_single),
    ];
    let mut failures = 0;
    for (name, run) in checks {
        match run() {
            Ok(()) => println!("PASS {name}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        return Err(Error::SelftestFailed(failures));
    }
    Ok(())
}

fn selftest_closed_form_pair() -> Result<(), String> {
    for (m, q) in [(2usize, 0.5f64), (3, 0.3), (5, 0.7)] {
        let scale = RatingScale::new(m).map_err(|e| e.to_string())?;
        let target = asymptotic_paa_regret(scale, q);
        let (theta1, theta2) = prop_worst_structures(scale, q);
        let spec = AggregatorSpec::Paa { q };
        for theta in [&theta1, &theta2] {
            let loss = asymptotic_loss(&spec, theta).map_err(|e| e.to_string())?;
            if (loss - target).abs() > 1e-9 {
                return Err(format!("m={m} q={q}: loss {loss} vs closed form {target}"));
            }
        }
    }
    Ok(())
}

fn selftest_asymptotic_sweep() -> Result<(), String> {
    let scale = RatingScale::new(3).map_err(|e| e.to_string())?;
    let record = adversary_search(
        &AggregatorSpec::Paa { q: 0.5 },
        SampleSize::Asymptotic,
        scale,
        0.5,
        Family::TwoPointMonotone,
        GridSpec::default(),
        EvalMode::default(),
    )
    .map_err(|e| e.to_string())?;
    let target = 1.0 / 9.0;
    if (record.regret - target).abs() > 1e-6 {
        return Err(format!("worst regret {} vs {target}", record.regret));
    }
    Ok(())
}

fn selftest_paa_collapse() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let m = rng.gen_range(2usize..=5);
        let scale = RatingScale::new(m).map_err(|e| e.to_string())?;
        let counts: Vec<u64> = (0..m).map(|_| rng.gen_range(0..20)).collect();
        if counts.iter().sum::<u64>() == 0 {
            continue;
        }
        let h = ObservedHistogram { counts, n_u: 0 };
        let avg = AggregatorSpec::Avg
            .apply_histogram(&h, scale)
            .map_err(|e| e.to_string())?;
        let paa = AggregatorSpec::Paa { q: 1.0 }
            .apply_histogram(&h, scale)
            .map_err(|e| e.to_string())?;
        if (avg - paa).abs() > 1e-12 {
            return Err(format!("counts {:?}: paa {paa} vs avg {avg}", h.counts));
        }
    }
    Ok(())
}

fn selftest_reversal() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..100 {
        let m = rng.gen_range(2usize..=5);
        let scale = RatingScale::new(m).map_err(|e| e.to_string())?;
        let counts: Vec<u64> = (0..m).map(|_| rng.gen_range(0..12)).collect();
        if counts.iter().sum::<u64>() == 0 {
            continue;
        }
        let n_u = rng.gen_range(0..5);
        let h = ObservedHistogram {
            counts: counts.clone(),
            n_u,
        };
        let rev = ObservedHistogram {
            counts: counts.iter().rev().copied().collect(),
            n_u,
        };
        let specs = [
            AggregatorSpec::Avg,
            AggregatorSpec::Paa { q: 0.5 },
            AggregatorSpec::Bea(
                BeaParams::with_a_star(h.n(), 0.5, 0.37).map_err(|e| e.to_string())?,
            ),
        ];
        for spec in &specs {
            let y = spec.apply_histogram(&h, scale).map_err(|e| e.to_string())?;
            let y_rev = spec
                .apply_histogram(&rev, scale)
                .map_err(|e| e.to_string())?;
            let want = (m + 1) as f64;
            if (y + y_rev - want).abs() > 1e-9 {
                return Err(format!(
                    "{} on counts {counts:?}: {y} + {y_rev} != {want}",
                    spec.name()
                ));
            }
        }
    }
    Ok(())
}

fn selftest_drift() -> Result<(), String> {
    let scale = RatingScale::new(2).map_err(|e| e.to_string())?;
    let p = CategoricalDistribution::new(vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let g = ParticipationProfile::new(vec![1.0, 0.5], 0.5).map_err(|e| e.to_string())?;
    let theta = InformationStructure::new(p, g).map_err(|e| e.to_string())?;
    let (_, observed) = simulate(
        &theta,
        100_000,
        RngSpec {
            seed: 20260822,
            stream: 0,
        },
    );
    let avg = AggregatorSpec::Avg
        .apply_histogram(&observed, scale)
        .map_err(|e| e.to_string())?;
    let want = 4.0 / 3.0;
    if (avg - want).abs() > 0.01 {
        return Err(format!("observed mean {avg} vs {want}"));
    }
    Ok(())
}

fn selftest_exact_single() -> Result<(), String> {
    let p = CategoricalDistribution::new(vec![1.0, 0.0]).map_err(|e| e.to_string())?;
    let g = ParticipationProfile::new(vec![0.5, 1.0], 0.5).map_err(|e| e.to_string())?;
    let theta = InformationStructure::new(p, g).map_err(|e| e.to_string())?;
    let query = RegretQuery {
        aggregator: AggregatorSpec::Avg,
        structure: theta,
        n: SampleSize::Finite(1),
    };
    let loss = exact_loss(&query).map_err(|e| e.to_string())?;
    if (loss - 0.125).abs() > 1e-12 {
        return Err(format!("single-rater loss {loss} vs 0.125"));
    }

    let p = CategoricalDistribution::new(vec![0.3, 0.7]).map_err(|e| e.to_string())?;
    let g = ParticipationProfile::new(vec![1.0, 1.0], 1.0).map_err(|e| e.to_string())?;
    let theta = InformationStructure::new(p, g).map_err(|e| e.to_string())?;
    let query = RegretQuery {
        aggregator: AggregatorSpec::Avg,
        structure: theta,
        n: SampleSize::Finite(6),
    };
    let regret = exact_regret(&query).map_err(|e| e.to_string())?;
    if regret.abs() > 1e-12 {
        return Err(format!("full-participation regret {regret} should vanish"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn q_grid_expansion() {
        let qs = parse_q_grid("0.1:0.9:0.2").unwrap();
        assert_eq!(qs, vec![0.1, 0.3, 0.5, 0.7, 0.9]);
        assert_eq!(parse_q_grid("0.3:0.5:0.2").unwrap(), vec![0.3, 0.5]);
        assert_eq!(parse_q_grid("1:1:0.1").unwrap(), vec![1.0]);
        assert_eq!(parse_q_grid("0.5:0.5:1").unwrap(), vec![0.5]);
    }

    #[test]
    fn q_grid_rejects_bad_specs() {
        for bad in [
            "0:1:0.1",
            "0.5:0.4:0.1",
            "0.5:1.2:0.1",
            "a:b:c",
            "0.1:0.9",
            "0.1:0.9:0",
        ] {
            assert!(parse_q_grid(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn aggregator_names_parse() {
        assert_eq!(agg_kind("avg").unwrap(), AggKind::Avg);
        assert_eq!(agg_kind("spe").unwrap(), AggKind::Spe);
        assert_eq!(agg_kind("bea").unwrap(), AggKind::Bea);
        assert_eq!(agg_kind("paa").unwrap(), AggKind::Paa);
        assert!(agg_kind("median").is_err());
    }

    #[test]
    fn family_lists_expand_and_dedupe() {
        let all = parse_families(&["all".into()]).unwrap();
        assert_eq!(
            all,
            vec![
                Family::TwoPointMonotone,
                Family::TwoPointUniformG,
                Family::GeneralGrid
            ]
        );
        let dup = parse_families(&["two-point".into(), "two-point".into()]).unwrap();
        assert_eq!(dup, vec![Family::TwoPointMonotone]);
        assert!(parse_families(&["ladder".into()]).is_err());
    }

    #[test]
    fn bea_requires_q_and_n() {
        let scale = RatingScale::new(3).unwrap();
        assert!(make_spec(AggKind::Bea, None, Some(5), None, scale).is_err());
        assert!(make_spec(AggKind::Bea, Some(0.5), None, None, scale).is_err());
        assert!(make_spec(AggKind::Bea, Some(0.5), Some(5), None, scale).is_ok());
        assert!(make_spec(AggKind::Paa, None, None, None, scale).is_err());
    }

    #[test]
    fn selftest_checks_pass() {
        assert_eq!(selftest_closed_form_pair(), Ok(()));
        assert_eq!(selftest_paa_collapse(), Ok(()));
        assert_eq!(selftest_exact_single(), Ok(()));
    }
}
