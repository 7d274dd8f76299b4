//! Crate-wide error type.
//!
//! Every fallible operation returns one of these variants; the CLI maps them
//! onto exit codes (usage 2, computation 3, input/output 4).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or flag combination, detected before any computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Histogram counts do not add up to the declared rater total.
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),

    /// Exact enumeration would visit more outcomes than the configured cap.
    #[error("exact enumeration needs {outcomes:.3e} outcomes, above the cap of {cap:.3e}; rerun with Monte Carlo trials")]
    EnumerationTooLarge { outcomes: f64, cap: f64 },

    /// Every rating in the histogram is unobserved.
    #[error("all ratings are unobserved; the empirical distribution is undefined")]
    AllUnobserved,

    /// The structure assigns zero probability to every observable rating.
    /// Unreachable for q > 0; kept as a checked error rather than a panic.
    #[error("no rating has positive report probability")]
    NoReports,

    /// A raw rating falls outside the range the remap accepts.
    #[error("rating {value} is outside the supported range 1..=10{}", fmt_line(.line))]
    OutOfRange { value: i64, line: Option<u64> },

    /// An ingested rating exceeds the configured scale.
    #[error("rating {rating} exceeds the scale maximum m = {m}")]
    BadScale { rating: u32, m: usize },

    /// The declared rater total is smaller than the number of ingested ratings.
    #[error("declared total {n} is smaller than the {count} ingested ratings")]
    BadTotal { n: u64, count: u64 },

    /// A malformed field in an input file.
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// One or more self-test checks failed.
    #[error("self-test failed: {0} check(s) did not pass")]
    SelftestFailed(usize),
}

fn fmt_line(line: &Option<u64>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}
