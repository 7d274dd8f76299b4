//! Rating aggregation that stays accurate when raters self-select.
//!
//! A panel of `n` raters holds iid opinions on a 1..=m scale, but a rater
//! with opinion `r` only reports it with probability `g_r ∈ [q, 1]`. The
//! resulting histograms over-represent whichever opinions speak up, so the
//! plain average of reports can miss the true mean opinion badly. This crate
//! provides:
//!
//! - aggregators: the plain average (`avg`), a root-mean-square baseline
//!   (`spe`), a best-response estimator for a known rater total (`bea`), and
//!   a reweighting-window midpoint for an unknown total (`paa`);
//! - regret evaluation against a fixed participation structure, by exact
//!   enumeration or Monte Carlo, plus the large-panel limit;
//! - the worst-case regret lower bound no aggregator can beat, and grid
//!   searches over adversarial structure families;
//! - panel simulation and CSV/JSON/SVG input-output for all of the above.
//!
//! The binary `robust-rating` exposes each piece as a subcommand; see the
//! README for invocations.

pub mod aggregator;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
mod numeric;
pub mod regret;
pub mod sample;

pub use error::Error;
