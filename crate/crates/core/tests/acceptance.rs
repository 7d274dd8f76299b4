//! End-to-end acceptance checks, one test per headline property. Each test
//! prints its wall time so slow regressions are visible with --nocapture.

use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use robust_rating::aggregator::{paa_bounds, AggregatorSpec, BeaParams};
use robust_rating::io::{build_histogram, read_ratings_csv, remap_rating};
use robust_rating::model::{
    CategoricalDistribution, EmpiricalDistribution, InformationStructure, ObservedHistogram,
    ParticipationProfile, RatingScale,
};
use robust_rating::regret::{
    adversary_search, asymptotic_loss, asymptotic_paa_regret, exact_regret, lower_bound, mc_regret,
    prop_worst_structures, two_point_high_hidden, two_point_low_hidden, worst_over_families,
    EvalMode, Family, GridSpec, RegretQuery, SampleSize,
};

fn scale(m: usize) -> RatingScale {
    RatingScale::new(m).unwrap()
}

/// Worst-case regret over the default family union, exact evaluation.
fn worst(spec: &AggregatorSpec, n: u64, scale: RatingScale, q: f64) -> f64 {
    worst_over_families(
        spec,
        SampleSize::Finite(n),
        scale,
        q,
        &[Family::TwoPointMonotone, Family::TwoPointUniformG],
        GridSpec::default(),
        EvalMode::default(),
    )
    .unwrap()
    .regret
}

fn bea_spec(n: u64, scale: RatingScale, q: f64) -> AggregatorSpec {
    AggregatorSpec::Bea(BeaParams::solve(n, scale, q).unwrap())
}

#[test]
fn c01_worst_pair_attains_the_closed_form_asymptotic_paa_regret() {
    let start = Instant::now();
    for m in [2usize, 3, 5] {
        let scale = scale(m);
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let target = asymptotic_paa_regret(scale, q);
            let (theta1, theta2) = prop_worst_structures(scale, q);
            let spec = AggregatorSpec::Paa { q };
            for theta in [&theta1, &theta2] {
                let loss = asymptotic_loss(&spec, theta).unwrap();
                assert!(
                    (loss - target).abs() <= 1e-9,
                    "m={m} q={q}: loss {loss} vs closed form {target}"
                );
            }
        }
    }
    println!("c01 done in {:.2?}", start.elapsed());
}

#[test]
fn c02_adversary_search_rediscovers_the_asymptotic_optimum() {
    let start = Instant::now();
    let record = adversary_search(
        &AggregatorSpec::Paa { q: 0.5 },
        SampleSize::Asymptotic,
        scale(3),
        0.5,
        Family::TwoPointMonotone,
        GridSpec::default(),
        EvalMode::default(),
    )
    .unwrap();
    let target = 1.0 / 9.0;
    assert!(
        (record.regret - target).abs() <= 1e-6,
        "worst asymptotic regret {} vs {target}",
        record.regret
    );
    // the maximizer parks 2/3 of the mass on one endpoint
    let peak = record.p[0].max(record.p[2]);
    assert!(
        (peak - 2.0 / 3.0).abs() <= 1.5e-3,
        "worst structure p={:?} should put about 2/3 on an endpoint",
        record.p
    );
    println!("c02 done in {:.2?}", start.elapsed());
}

#[test]
fn c03_bea_exact_regret_is_symmetric_and_meets_the_lower_bound() {
    let start = Instant::now();
    let scale = scale(3);
    let n = 10u64;
    for q in [0.5, 0.3] {
        let params = BeaParams::solve(n, scale, q).unwrap();
        let a_star = params.a_star();
        let spec = AggregatorSpec::Bea(params);
        let mirrored = [
            two_point_low_hidden(scale, q, a_star),
            two_point_high_hidden(scale, q, a_star),
        ];
        let regrets: Vec<f64> = mirrored
            .into_iter()
            .map(|structure| {
                exact_regret(&RegretQuery {
                    aggregator: spec.clone(),
                    structure,
                    n: SampleSize::Finite(n),
                })
                .unwrap()
            })
            .collect();
        let bound = lower_bound(n, scale, q);
        assert!(
            (regrets[0] - regrets[1]).abs() <= 1e-6,
            "q={q}: mirrored structures disagree: {} vs {}",
            regrets[0],
            regrets[1]
        );
        assert!(
            (regrets[0] - bound.value).abs() <= 1e-6,
            "q={q}: exact regret {} vs bound {} (gap {:+e})",
            regrets[0],
            bound.value,
            regrets[0] - bound.value
        );
    }
    println!("c03 done in {:.2?}", start.elapsed());
}

#[test]
fn c04_bea_beats_avg_and_tracks_the_bound_at_low_q() {
    let start = Instant::now();
    let scale = scale(3);
    let n = 20u64;
    for q in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let bea = worst(&bea_spec(n, scale, q), n, scale, q);
        let avg = worst(&AggregatorSpec::Avg, n, scale, q);
        let bound = lower_bound(n, scale, q).value;
        assert!(
            bea < avg,
            "q={q}: worst bea {bea} should sit below worst avg {avg}"
        );
        assert!(
            bea <= 1.5 * bound,
            "q={q}: worst bea {bea} exceeds 1.5x the bound {bound}"
        );
    }
    println!("c04 done in {:.2?}", start.elapsed());
}

#[test]
fn c05_avg_overtakes_bea_somewhere_at_high_q() {
    let start = Instant::now();
    let scale = scale(3);
    let n = 10u64;
    let mut crossover = None;
    let mut closest = (f64::NEG_INFINITY, 0.0);
    for k in 0..=25 {
        let q = 0.70 + 0.01 * k as f64;
        let bea = worst(&bea_spec(n, scale, q), n, scale, q);
        let avg = worst(&AggregatorSpec::Avg, n, scale, q);
        if bea / avg > closest.0 {
            closest = (bea / avg, q);
        }
        if bea > avg {
            crossover = Some(q);
            break;
        }
    }
    println!("c05 done in {:.2?}", start.elapsed());
    assert!(
        crossover.is_some(),
        "no q in [0.70, 0.95] has worst bea above worst avg; closest ratio {:.4} at q={:.2}",
        closest.0,
        closest.1
    );
}

#[test]
fn c06_spe_is_dominated_at_every_q() {
    let start = Instant::now();
    let scale = scale(5);
    let n = 20u64;
    for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let spe = worst(&AggregatorSpec::Spe, n, scale, q);
        let bea = worst(&bea_spec(n, scale, q), n, scale, q);
        let paa = worst(&AggregatorSpec::Paa { q }, n, scale, q);
        assert!(
            spe > bea,
            "q={q}: worst spe {spe} should exceed worst bea {bea}"
        );
        assert!(
            spe > paa,
            "q={q}: worst spe {spe} should exceed worst paa {paa}"
        );
    }
    println!("c06 done in {:.2?}", start.elapsed());
}

#[test]
fn c07_paa_regret_shrinks_as_the_panel_grows() {
    let start = Instant::now();
    let p = CategoricalDistribution::new(vec![0.67, 0.33]).unwrap();
    let g = ParticipationProfile::new(vec![0.5, 1.0], 0.5).unwrap();
    let structure = InformationStructure::new(p, g).unwrap();
    let spec = AggregatorSpec::Paa { q: 0.5 };
    let mut prev: Option<(u64, f64, f64)> = None;
    for n in [20u64, 40, 80, 160] {
        let query = RegretQuery {
            aggregator: spec.clone(),
            structure: structure.clone(),
            n: SampleSize::Finite(n),
        };
        let (regret, se) = mc_regret(&query, 100_000, 20260822).unwrap();
        if let Some((pn, pr, pse)) = prev {
            let slack = 2.0 * (pse * pse + se * se).sqrt();
            assert!(
                regret <= pr + slack,
                "regret should shrink with panel size: n={n} gives {regret} after n={pn} gave {pr} (slack {slack})"
            );
        }
        prev = Some((n, regret, se));
    }
    println!("c07 done in {:.2?}", start.elapsed());
}

#[test]
fn c08_selective_silence_drags_the_observed_mean() {
    let start = Instant::now();
    let p = CategoricalDistribution::new(vec![0.5, 0.5]).unwrap();
    let g = ParticipationProfile::new(vec![1.0, 0.5], 0.5).unwrap();
    let structure = InformationStructure::new(p, g).unwrap();
    let (_, observed) = robust_rating::sample::simulate(
        &structure,
        100_000,
        robust_rating::sample::RngSpec {
            seed: 20260822,
            stream: 0,
        },
    );
    let avg = AggregatorSpec::Avg
        .apply_histogram(&observed, scale(2))
        .unwrap();
    let want = 4.0 / 3.0;
    assert!(
        (avg - want).abs() < 0.01,
        "observed average {avg} should drift to {want} when high ratings go quiet"
    );
    println!("c08 done in {:.2?}", start.elapsed());
}

fn reweighted_mean_under(phat: &[f64], g: &[f64]) -> f64 {
    let mut weight = 0.0;
    let mut total = 0.0;
    for (i, (&p, &gr)) in phat.iter().zip(g).enumerate() {
        let w = p / gr;
        weight += w;
        total += w * (i as f64 + 1.0);
    }
    total / weight
}

/// Every participation profile on a grid of `[q, 1]` values per rating.
fn for_each_grid_profile(m: usize, q: f64, mut f: impl FnMut(&[f64])) {
    let mut ladder = Vec::new();
    let mut x = q;
    while x < 1.0 - 1e-12 {
        ladder.push(x);
        x += 0.1;
    }
    ladder.push(1.0);
    let levels = ladder.len();
    let combos = levels.pow(m as u32);
    let mut g = vec![0.0; m];
    for mut idx in 0..combos {
        for slot in g.iter_mut() {
            *slot = ladder[idx % levels];
            idx /= levels;
        }
        f(&g);
    }
}

#[test]
fn c09_internal_consistency_battery() {
    let start = Instant::now();

    // (a) the paa window brackets every grid reweighting, and its endpoints
    // are exactly the best step-profile reweightings
    let mut rng = StdRng::seed_from_u64(20260822);
    for _ in 0..200 {
        let m = rng.gen_range(2usize..=4);
        let q = rng.gen_range(0.1..1.0);
        let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let phat = EmpiricalDistribution::from_probs(probs.clone()).unwrap();
        let bounds = paa_bounds(&phat, q, scale(m));
        for_each_grid_profile(m, q, |g| {
            let value = reweighted_mean_under(&probs, g);
            assert!(
                bounds.l - 1e-12 <= value && value <= bounds.u + 1e-12,
                "reweighting under g={g:?} escapes [{}, {}] for phat={probs:?} q={q}",
                bounds.l,
                bounds.u
            );
        });
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=m {
            let low_first: Vec<f64> = (0..m).map(|r| if r < k { q } else { 1.0 }).collect();
            let high_first: Vec<f64> = (0..m).map(|r| if r < k { 1.0 } else { q }).collect();
            for g in [low_first, high_first] {
                let value = reweighted_mean_under(&probs, &g);
                lo = lo.min(value);
                hi = hi.max(value);
            }
        }
        assert!(
            (bounds.l - lo).abs() <= 1e-12,
            "l={} vs step-profile min {lo}",
            bounds.l
        );
        assert!(
            (bounds.u - hi).abs() <= 1e-12,
            "u={} vs step-profile max {hi}",
            bounds.u
        );
    }

    // (b) Monte Carlo agrees with exact enumeration on random structures
    let mut rng = StdRng::seed_from_u64(42);
    let scale3 = scale(3);
    let mut outliers = 0usize;
    for i in 0..20u64 {
        let q = rng.gen_range(0.2..1.0);
        let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p = CategoricalDistribution::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let g: Vec<f64> = (0..3).map(|_| rng.gen_range(q..=1.0)).collect();
        let structure =
            InformationStructure::new(p, ParticipationProfile::new(g, q).unwrap()).unwrap();
        let aggregator = match i % 4 {
            0 => AggregatorSpec::Avg,
            1 => AggregatorSpec::Spe,
            2 => bea_spec(10, scale3, q),
            _ => AggregatorSpec::Paa { q },
        };
        let query = RegretQuery {
            aggregator,
            structure,
            n: SampleSize::Finite(10),
        };
        let exact = exact_regret(&query).unwrap();
        let (mc, se) = mc_regret(&query, 100_000, 1000 + i).unwrap();
        if (mc - exact).abs() > 4.0 * se + 1e-12 {
            outliers += 1;
        }
    }
    assert!(
        outliers <= 1,
        "{outliers} of 20 Monte Carlo runs sit beyond 4 standard errors"
    );

    // (c) full participation collapses paa to the plain average
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let m = rng.gen_range(2usize..=5);
        let counts: Vec<u64> = (0..m).map(|_| rng.gen_range(0..20)).collect();
        if counts.iter().sum::<u64>() == 0 {
            continue;
        }
        let h = ObservedHistogram { counts, n_u: 0 };
        let avg = AggregatorSpec::Avg.apply_histogram(&h, scale(m)).unwrap();
        let paa = AggregatorSpec::Paa { q: 1.0 }
            .apply_histogram(&h, scale(m))
            .unwrap();
        assert!(
            (avg - paa).abs() <= 1e-12,
            "counts {:?}: paa {paa} vs avg {avg}",
            h.counts
        );
    }

    // (d) flipping the scale flips every estimate around the midpoint
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..100 {
        let m = rng.gen_range(2usize..=5);
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
            AggregatorSpec::Bea(BeaParams::with_a_star(h.n(), 0.5, 0.37).unwrap()),
        ];
        for spec in &specs {
            let y = spec.apply_histogram(&h, scale(m)).unwrap();
            let y_rev = spec.apply_histogram(&rev, scale(m)).unwrap();
            assert!(
                (y + y_rev - (m + 1) as f64).abs() <= 1e-9,
                "{} breaks reversal symmetry on {counts:?}: {y} + {y_rev}",
                spec.name()
            );
        }
    }

    println!("c09 done in {:.2?}", start.elapsed());
}

#[test]
fn c10_ratings_file_flows_through_the_whole_pipeline() {
    let start = Instant::now();
    let expected = [1u32, 1, 1, 1, 2, 3, 4, 5, 6, 7];
    for (s, want) in (1..=10).zip(expected) {
        assert_eq!(remap_rating(s).unwrap(), want, "raw rating {s}");
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ratings.csv");
    let records = read_ratings_csv(&path, "rating", true).unwrap();
    assert_eq!(
        records.len(),
        44,
        "zeros mark unobserved raters and are skipped"
    );

    let scale7 = scale(7);
    let h = build_histogram(&records, scale7, Some(50)).unwrap();
    assert_eq!(h.counts, vec![12, 6, 8, 6, 0, 6, 6]);
    assert_eq!(h.n_u, 6);

    let q = 0.3;
    let avg = AggregatorSpec::Avg.apply_histogram(&h, scale7).unwrap();
    let spe = AggregatorSpec::Spe.apply_histogram(&h, scale7).unwrap();
    let paa = AggregatorSpec::Paa { q }
        .apply_histogram(&h, scale7)
        .unwrap();
    let bea = AggregatorSpec::Bea(BeaParams::solve(50, scale7, q).unwrap())
        .apply_histogram(&h, scale7)
        .unwrap();
    assert!((avg - 3.409090909091).abs() <= 1e-6, "avg {avg}");
    assert!((spe - 4.028308916564).abs() <= 1e-6, "spe {spe}");
    assert!((paa - 3.503229974160).abs() <= 1e-6, "paa {paa}");
    assert!((bea - 3.436330688213).abs() <= 1e-6, "bea {bea}");
    println!("c10 done in {:.2?}", start.elapsed());
}
