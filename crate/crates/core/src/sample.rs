//! Seeded sampling: draw the ratings all n raters hold, then thin them down
//! to what the platform observes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::model::{
    CategoricalDistribution, FullHistogram, InformationStructure, ObservedHistogram,
    ParticipationProfile,
};

/// Seed plus stream index; the pair fully determines every draw. Parallel
/// trials use their trial index as the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Draw n i.i.d. ratings from p as a histogram, via a chain of conditional
/// binomials (O(m) draws instead of O(n)).
pub fn sample_full(p: &CategoricalDistribution, n: u64, spec: RngSpec) -> FullHistogram {
    let mut rng = spec.rng();
    let probs = p.probs();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut tail = 1.0;
    for r in 0..probs.len() - 1 {
        if remaining == 0 {
            break;
        }
        // probability of rating r+1 among the still-unassigned raters; the
        // clamp absorbs the roundoff the running tail accumulates
        let pr = if tail > 0.0 {
            (probs[r] / tail).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let c = Binomial::new(remaining, pr)
            .expect("probability is clamped to [0, 1]")
            .sample(&mut rng);
        counts[r] = c;
        remaining -= c;
        tail -= probs[r];
    }
    *counts.last_mut().expect("at least two categories") = remaining;
    FullHistogram { counts }
}

/// Keep each rating of value r with probability `g_r`; everything dropped
/// accumulates into the silent-rater count.
pub fn thin(full: &FullHistogram, g: &ParticipationProfile, spec: RngSpec) -> ObservedHistogram {
    debug_assert_eq!(full.counts.len(), g.g().len());
    let mut rng = spec.rng();
    let mut counts = vec![0u64; full.counts.len()];
    for (r, (&c, &gr)) in full.counts.iter().zip(g.g()).enumerate() {
        counts[r] = Binomial::new(c, gr.clamp(0.0, 1.0))
            .expect("report probability is clamped to [0, 1]")
            .sample(&mut rng);
    }
    let n_u = full.n() - counts.iter().sum::<u64>();
    ObservedHistogram { counts, n_u }
}

/// One experiment: draw the full histogram, then thin it. The two stages use
/// sub-streams `2k` and `2k + 1` of `spec.stream = k`, so distinct trial
/// indices never share randomness.
pub fn simulate(
    theta: &InformationStructure,
    n: u64,
    spec: RngSpec,
) -> (FullHistogram, ObservedHistogram) {
    let full = sample_full(
        theta.p(),
        n,
        RngSpec {
            seed: spec.seed,
            stream: spec.stream.wrapping_mul(2),
        },
    );
    let observed = thin(
        &full,
        theta.g(),
        RngSpec {
            seed: spec.seed,
            stream: spec.stream.wrapping_mul(2).wrapping_add(1),
        },
    );
    (full, observed)
}
