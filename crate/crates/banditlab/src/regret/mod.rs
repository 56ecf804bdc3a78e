//! Pseudo-regret accounting and theoretical bound curves.
//!
//! Regret is tracked as pseudo-regret (true-mean gaps times play counts)
//! decomposed into three nondecreasing components: exploration shortfall
//! R^O, exploitation suboptimality R^I, and coordination cost R^C. The
//! bound calculators reproduce the policies' guarantee curves so empirical
//! trajectories can be checked against them point by point.

pub mod cdf;

use std::fmt;

pub use cdf::{beta_cdf, binom_cdf, cdf_identity_residual, CdfError};

use crate::LogBase;

#[derive(Debug, Clone, PartialEq)]
pub enum RegretError {
    /// Play counts don't add up to the elapsed slots.
    CountMismatch { counted: u64, slots: u64 },
}

impl fmt::Display for RegretError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegretError::CountMismatch { counted, slots } => {
                write!(f, "play counts sum to {counted} but {slots} slots elapsed")
            }
        }
    }
}

impl std::error::Error for RegretError {}

/// Exploration / exploitation / coordination split of cumulative regret.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegretBreakdown {
    pub explore: f64,
    pub exploit: f64,
    pub comm: f64,
}

impl RegretBreakdown {
    pub fn total(&self) -> f64 {
        self.explore + self.exploit + self.comm
    }
}

/// One logged point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub total: f64,
    pub explore: f64,
    pub exploit: f64,
    pub comm: f64,
    pub epoch: u32,
    pub bound: Option<f64>,
}

/// Append-only pseudo-regret accumulator owned by one run.
///
/// The total is always computed as the sum of the three components, so
/// ledger additivity holds exactly at every snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    components: RegretBreakdown,
    /// Plays per (player, arm), row-major.
    play_counts: Vec<u64>,
    players: usize,
    arms: usize,
    /// Completed index-computation / matching events, m(T).
    matchings: u64,
}

impl RegretLedger {
    pub fn new(players: usize, arms: usize) -> Self {
        RegretLedger {
            components: RegretBreakdown::default(),
            play_counts: vec![0; players * arms],
            players,
            arms,
            matchings: 0,
        }
    }

    pub fn charge_explore(&mut self, deficit: f64) {
        debug_assert!(deficit >= 0.0);
        self.components.explore += deficit;
    }

    pub fn charge_exploit(&mut self, deficit: f64) {
        debug_assert!(deficit >= 0.0);
        self.components.exploit += deficit;
    }

    pub fn charge_comm(&mut self, cost: f64) {
        debug_assert!(cost >= 0.0);
        self.components.comm += cost;
    }

    pub fn record_plays(&mut self, player: usize, arm: usize, count: u64) {
        self.play_counts[player * self.arms + arm] += count;
    }

    pub fn record_matching(&mut self) {
        self.matchings += 1;
    }

    pub fn components(&self) -> RegretBreakdown {
        self.components
    }

    pub fn total(&self) -> f64 {
        self.components.total()
    }

    pub fn plays(&self, player: usize, arm: usize) -> u64 {
        self.play_counts[player * self.arms + arm]
    }

    /// m(T): completed selection / matching events.
    pub fn matchings(&self) -> u64 {
        self.matchings
    }

    pub fn snapshot(&self, t: u64, epoch: u32, bound: Option<f64>) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            total: self.total(),
            explore: self.components.explore,
            exploit: self.components.exploit,
            comm: self.components.comm,
            epoch,
            bound,
        }
    }
}

/// Recompute single-player pseudo-regret from final tallies:
/// Σ_j Δ_j·n_j + cost·events. The independent consistency oracle for the
/// incrementally accumulated ledger.
pub fn pseudo_regret_single(
    play_counts: &[u64],
    gaps: &[f64],
    slots: u64,
    cost_events: u64,
    cost_per_event: f64,
) -> Result<f64, RegretError> {
    assert_eq!(play_counts.len(), gaps.len());
    let counted: u64 = play_counts.iter().sum();
    if counted != slots {
        return Err(RegretError::CountMismatch { counted, slots });
    }
    let gap_term: f64 = play_counts
        .iter()
        .zip(gaps)
        .map(|(&n, &gap)| n as f64 * gap)
        .sum();
    Ok(gap_term + cost_events as f64 * cost_per_event)
}

/// Phase tag for recorded multiplayer slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotPhase {
    Explore,
    Exploit,
}

/// One multiplayer slot as the regret oracle sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSlotRecord {
    pub phase: SlotPhase,
    /// Arm per player; `None` is no action.
    pub actions: Vec<Option<usize>>,
    /// Whether each player's play collided (zero reward).
    pub collided: Vec<bool>,
}

/// Recompute multiplayer pseudo-regret from a full slot history: each slot
/// adds μ** minus the sum of true means of non-colliding plays (a colliding
/// player forfeits their whole term), attributed to its phase; cost charges
/// add to the coordination component.
pub fn pseudo_regret_multi(
    records: &[MultiSlotRecord],
    mean_matrix: &[Vec<f64>],
    optimal_surplus: f64,
    cost_charges: &[f64],
) -> RegretBreakdown {
    let mut breakdown = RegretBreakdown::default();
    for record in records {
        let collected: f64 = record
            .actions
            .iter()
            .enumerate()
            .filter_map(|(player, action)| {
                action
                    .filter(|_| !record.collided[player])
                    .map(|arm| mean_matrix[player][arm])
            })
            .sum();
        let deficit = optimal_surplus - collected;
        match record.phase {
            SlotPhase::Explore => breakdown.explore += deficit,
            SlotPhase::Exploit => breakdown.exploit += deficit,
        }
    }
    breakdown.comm = cost_charges.iter().sum();
    breakdown
}

/// Parameters of a theoretical bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    pub arms: usize,
    pub players: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    /// γ (or γ_β) for the fixed-schedule bounds.
    pub gamma: u32,
    /// Per-computation cost C (or C(ε) already evaluated).
    pub cost: f64,
    /// δ for the unknown-gap bounds.
    pub delta: Option<f64>,
    pub base: LogBase,
}

/// Known-gap phased bound: N·Δmax·γ·log T + N·C·log T + 8·N·Δmax.
pub fn bound_e3(t: u64, spec: &BoundSpec) -> f64 {
    let log_t = spec.base.log(t as f64);
    let n = spec.arms as f64;
    n * spec.delta_max * spec.gamma as f64 * log_t
        + n * spec.cost * log_t
        + 8.0 * n * spec.delta_max
}

/// Posterior-sampling variant: γ_β in place of γ and a 16·N·Δmax tail.
pub fn bound_e3ts(t: u64, spec: &BoundSpec) -> f64 {
    let log_t = spec.base.log(t as f64);
    let n = spec.arms as f64;
    n * spec.delta_max * spec.gamma as f64 * log_t
        + n * spec.cost * log_t
        + 16.0 * n * spec.delta_max
}

/// Multiplayer known-gap bound: the single-player curve scaled by M, with
/// the coordination cost already per-matching-unit C(ε).
pub fn bound_de3(t: u64, spec: &BoundSpec) -> f64 {
    let log_t = spec.base.log(t as f64);
    let mn = (spec.players * spec.arms) as f64;
    mn * spec.delta_max * spec.gamma as f64 * log_t
        + mn * spec.cost * log_t
        + 8.0 * mn * spec.delta_max
}

pub fn bound_de3ts(t: u64, spec: &BoundSpec) -> f64 {
    let log_t = spec.base.log(t as f64);
    let mn = (spec.players * spec.arms) as f64;
    mn * spec.delta_max * spec.gamma as f64 * log_t
        + mn * spec.cost * log_t
        + 16.0 * mn * spec.delta_max
}

/// Unknown-gap bound, split because its constant term B(δ) = 2^(l(δ)) with
/// l(δ) = (Δ²min/4)^(−1/δ) overflows f64 for small δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnknownBound {
    /// The growing terms: N·Δmax·log^(1+δ) T + N·C·log T.
    pub leading: f64,
    /// Coefficient of the constant term (N·Δmax).
    pub tail_coefficient: f64,
    /// log₂ B(δ); the constant term is tail_coefficient·2^this.
    pub log2_constant: f64,
}

impl UnknownBound {
    /// Full value when the constant term is representable, +∞ otherwise.
    pub fn value(&self) -> f64 {
        self.leading + self.tail_coefficient * self.log2_constant.exp2()
    }
}

/// Single-player bound for the diverging schedule γ_t = log^δ t.
pub fn bound_unknown(t: u64, spec: &BoundSpec) -> UnknownBound {
    let delta = spec.delta.expect("unknown-gap bound needs delta");
    let log_t = spec.base.log(t as f64);
    let n = spec.arms as f64;
    UnknownBound {
        leading: n * spec.delta_max * log_t.powf(1.0 + delta) + n * spec.cost * log_t,
        tail_coefficient: n * spec.delta_max,
        log2_constant: l_of_delta(spec.delta_min, delta),
    }
}

/// Multiplayer unknown-gap bound under C(ε) = 1/ε and ε_t = log^(−δ) t, so
/// the cost term is itself M·N·log^(1+δ) T. The constant's scale factor b₀
/// is unspecified upstream; it is taken as 1, so the curve is meaningful up
/// to that constant.
pub fn bound_unknown_multi(t: u64, spec: &BoundSpec) -> UnknownBound {
    let delta = spec.delta.expect("unknown-gap bound needs delta");
    let log_t = spec.base.log(t as f64);
    let mn = (spec.players * spec.arms) as f64;
    UnknownBound {
        leading: mn * spec.delta_max * log_t.powf(1.0 + delta) + mn * log_t.powf(1.0 + delta),
        tail_coefficient: mn,
        log2_constant: l_of_delta(spec.delta_min, delta),
    }
}

/// l(δ) = (Δ²min/4)^(−1/δ), the epoch index after which the suboptimal-
/// selection tail is summable.
pub fn l_of_delta(delta_min: f64, delta: f64) -> f64 {
    (delta_min * delta_min / 4.0).powf(-1.0 / delta)
}

/// UCB1 reference bound: 8·ln T·Σ 1/Δ_j + (1 + π²/3)·Σ Δ_j, natural log by
/// convention of its source. Only strictly suboptimal arms enter the sums.
pub fn bound_ucb1(t: u64, gaps: &[f64]) -> f64 {
    let ln_t = (t as f64).ln();
    let inv_sum: f64 = gaps.iter().filter(|&&g| g > 0.0).map(|&g| 1.0 / g).sum();
    let gap_sum: f64 = gaps.iter().filter(|&&g| g > 0.0).sum();
    8.0 * ln_t * inv_sum + (1.0 + std::f64::consts::PI.powi(2) / 3.0) * gap_sum
}

/// Chernoff–Hoeffding tail e^(−2a²t) for a mean of t bounded variables
/// deviating by a.
pub fn chernoff_tail(a: f64, t: u64) -> f64 {
    (-2.0 * a * a * t as f64).exp()
}
