//! A deterministic, reproducible simulation lab for single-player and
//! decentralized multiplayer multi-armed bandits.
//!
//! The crate is organized around six pieces:
//!
//! - [`mod@env`] — ground-truth reward models, collision semantics, gap
//!   computation, and seeded random-number substreams.
//! - [`policy::single`] — the phased exploration/exploitation policies
//!   (sample-mean and posterior-sampling variants) plus UCB1 and Thompson
//!   Sampling baselines.
//! - [`matching`] — an ε-optimal synchronous auction for distributed
//!   bipartite matching, an exhaustive oracle, index quantization, and
//!   communication-slot accounting.
//! - [`policy::multi`] — the decentralized multiplayer phased policies that
//!   drive the auction once per epoch.
//! - [`regret`] — pseudo-regret ledgers, theoretical bound curves, and the
//!   Beta/Binomial CDF machinery used to cross-check them.
//! - [`harness`] — experiment configuration, seeded replication runners,
//!   CSV emission, and the built-in reproduction recipes.
//!
//! Everything is deterministic given a master seed: replications, players,
//! and sampling purposes each get their own counter-based RNG substream, so
//! adding a policy or a run never perturbs another's draws.

pub mod env;
pub mod harness;
pub mod matching;
pub mod policy;
pub mod regret;

/// Logarithm base used by γ schedules and bound curves.
///
/// The doubling-epoch accounting (`2^l ≤ T`) makes base 2 the natural
/// default for the phased-policy bounds; the UCB1 reference bound uses the
/// natural log per its source convention. Both are exposed as configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::Natural => "e",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "2" => Some(LogBase::Two),
            "e" => Some(LogBase::Natural),
            _ => None,
        }
    }
}

/// Index of the largest value, ties broken toward the lowest index.
///
/// Every argmax in the crate routes through this so tie-breaking is uniform
/// and adding a common constant to all entries never changes the outcome.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax over empty slice");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Ceiling that forgives float noise just below an integer.
///
/// Formulas like ⌈2/Δ²⌉ are specified over decimal inputs; evaluating them
/// in binary can land an ulp above the intended integer and silently bump
/// the ceiling. A relative guard of 1e-12 absorbs that.
pub(crate) fn ceil_guarded(x: f64) -> f64 {
    (x - x.abs() * 1e-12).ceil()
}
