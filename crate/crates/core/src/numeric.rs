//! Shared numeric helpers: log-factorial tables, outcome-count bounds, and
//! composition iteration for exact multinomial enumeration.

/// Cumulative table of `ln(k!)` for `k ∈ 0..=n`, so multinomial weights can
/// be assembled in log space and survive n well beyond 170.
pub(crate) struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub(crate) fn up_to(n: u64) -> Self {
        let mut table = Vec::with_capacity(n as usize + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub(crate) fn ln_fact(&self, k: u64) -> f64 {
        self.table[k as usize]
    }

    /// `ln(n! / Π_j parts_j!)` — the log multinomial coefficient.
    pub(crate) fn ln_multinomial(&self, n: u64, parts: &[u64]) -> f64 {
        debug_assert_eq!(parts.iter().sum::<u64>(), n);
        self.ln_fact(n) - parts.iter().map(|&c| self.ln_fact(c)).sum::<f64>()
    }
}

/// `ln C(n + m, m)` — the number of ways to split n raters into m + 1
/// buckets — computed as `Σ_{j=1..m} ln((n + j) / j)` so huge n cannot
/// overflow anything.
pub(crate) fn ln_outcome_count(n: u64, m: usize) -> f64 {
    (1..=m as u64)
        .map(|j| ((n + j) as f64 / j as f64).ln())
        .sum()
}

/// Visit every ordered split of `total` into `parts` nonnegative counts.
pub(crate) fn for_each_composition<F: FnMut(&[u64])>(total: u64, parts: usize, f: &mut F) {
    assert!(parts >= 1, "need at least one part");
    let mut buf = vec![0u64; parts];
    fill(total, 0, &mut buf, f);
}

fn fill<F: FnMut(&[u64])>(rem: u64, idx: usize, buf: &mut [u64], f: &mut F) {
    if idx + 1 == buf.len() {
        buf[idx] = rem;
        f(buf);
        return;
    }
    for c in 0..=rem {
        buf[idx] = c;
        fill(rem - c, idx + 1, buf, f);
    }
}
