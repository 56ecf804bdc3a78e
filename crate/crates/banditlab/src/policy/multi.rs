//! Decentralized multiplayer phased policies.
//!
//! All players share one deterministic epoch schedule, so phase boundaries
//! need no explicit synchronization. During exploration player `i` plays arm
//! `(i + offset) mod N` — distinct residues mean zero collisions whenever
//! M ≤ N, and every player still collects exactly γ plays of every arm in
//! N·γ play slots. At each exploration boundary the players' indices
//! (sample means or posterior draws) are quantized and fed to the auction,
//! and the resulting matching is exploited for 2^l slots.

use rand_distr::{Beta, Distribution};

use crate::env::RngStream;
use crate::matching::{auction_run, AuctionTrace, Matching, MatchingError, ValueMatrix};
use crate::policy::single::{GammaSchedule, Phase};
use crate::policy::PolicyError;
use crate::{ceil_guarded, LogBase};

/// Matching precision schedule: fixed ε below the Δ/(M+1) threshold, or a
/// (log t)^(−δ) decay that vanishes as exploration sharpens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    Fixed { epsilon: f64 },
    Decaying { delta: f64 },
}

impl EpsilonSchedule {
    /// Fixed precision. The threshold check against Δ_LB/(M+1) belongs to
    /// the γ formulas, which reject violating combinations; here only
    /// positivity is enforced so exploratory configurations stay usable.
    pub fn fixed(epsilon: f64) -> Result<Self, PolicyError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(PolicyError::InvalidEpsilon(epsilon));
        }
        Ok(EpsilonSchedule::Fixed { epsilon })
    }

    /// Fixed precision validated against the known-gap threshold
    /// Δ/(M+1) that the multiplayer γ formulas presume.
    pub fn fixed_checked(epsilon: f64, delta_lb: f64, players: usize) -> Result<Self, PolicyError> {
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= delta_lb / (players as f64 + 1.0) {
            return Err(PolicyError::EpsilonTooLarge {
                epsilon,
                delta_lb,
                players,
            });
        }
        Ok(EpsilonSchedule::Fixed { epsilon })
    }

    pub fn decaying(delta: f64) -> Result<Self, PolicyError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PolicyError::InvalidDelta(delta));
        }
        Ok(EpsilonSchedule::Decaying { delta })
    }

    /// ε for the epoch whose exploration begins at slot `t`.
    pub fn epsilon_at(&self, t: u64, base: LogBase) -> f64 {
        match *self {
            EpsilonSchedule::Fixed { epsilon } => epsilon,
            EpsilonSchedule::Decaying { delta } => epsilon_decay(t.max(2), delta, base),
        }
    }
}

/// ε_t = (log t)^(−δ): positive, nonincreasing, vanishing.
pub fn epsilon_decay(t: u64, delta: f64, base: LogBase) -> f64 {
    assert!(t >= 2);
    assert!(delta > 0.0 && delta < 1.0);
    base.log(t as f64).powf(-delta)
}

/// γ = ⌈2M²/(Δ − (M+1)ε)²⌉ — multiplayer exploration intensity.
pub fn gamma_multi(players: usize, delta_lb: f64, epsilon: f64) -> Result<u32, PolicyError> {
    gamma_multi_scaled(players, delta_lb, epsilon, 2.0)
}

/// γ_β = ⌈8M²/(Δ − (M+1)ε)²⌉ — the posterior-sampling variant.
pub fn gamma_beta_multi(players: usize, delta_lb: f64, epsilon: f64) -> Result<u32, PolicyError> {
    gamma_multi_scaled(players, delta_lb, epsilon, 8.0)
}

fn gamma_multi_scaled(
    players: usize,
    delta_lb: f64,
    epsilon: f64,
    scale: f64,
) -> Result<u32, PolicyError> {
    if !(delta_lb > 0.0 && delta_lb <= players as f64) {
        return Err(PolicyError::InvalidDeltaLb(delta_lb));
    }
    let margin = delta_lb - (players as f64 + 1.0) * epsilon;
    if !epsilon.is_finite() || epsilon <= 0.0 || margin <= 0.0 {
        return Err(PolicyError::EpsilonTooLarge {
            epsilon,
            delta_lb,
            players,
        });
    }
    let m = players as f64;
    Ok(ceil_guarded(scale * m * m / (margin * margin)) as u32)
}

/// How exploration consumes the time axis.
///
/// The staggered simultaneous schedule finishes all plays in N·γ slots.
/// `Sequential` books M·N·γ wall-clock slots per exploration phase instead,
/// as if players explored one at a time — the time axis the bound
/// accounting assumes. `Actual` books the slots the schedule really
/// consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplorationAccounting {
    Actual,
    Sequential,
}

impl ExplorationAccounting {
    /// Wall-clock slots booked per exploration play slot.
    fn stride(self, players: usize) -> u64 {
        match self {
            ExplorationAccounting::Actual => 1,
            ExplorationAccounting::Sequential => players as u64,
        }
    }
}

/// Shared deterministic phase machine for the multiplayer policies.
///
/// Mirrors the single-player clock with two differences: exploration
/// bookkeeping distinguishes play slots from booked wall-clock slots, and
/// the matching precision ε is sampled alongside γ at each phase start.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiEpochClock {
    players: usize,
    arms: usize,
    gamma_schedule: GammaSchedule,
    epsilon_schedule: EpsilonSchedule,
    accounting: ExplorationAccounting,
    base: LogBase,
    epoch: u32,
    phase: Phase,
    offset: u64,
    gamma: u32,
    epsilon: f64,
    time: u64,
}

impl MultiEpochClock {
    pub fn new(
        players: usize,
        arms: usize,
        gamma_schedule: GammaSchedule,
        epsilon_schedule: EpsilonSchedule,
        accounting: ExplorationAccounting,
        base: LogBase,
    ) -> Self {
        assert!(players >= 1 && players <= arms);
        MultiEpochClock {
            players,
            arms,
            gamma_schedule,
            epsilon_schedule,
            accounting,
            base,
            epoch: 1,
            phase: Phase::Explore,
            offset: 0,
            gamma: gamma_schedule.gamma_at(0, base),
            epsilon: epsilon_schedule.epsilon_at(0, base),
            time: 0,
        }
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Play slots consumed in the current phase.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    /// Matching precision for the current epoch.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Wall-clock slots booked so far (accounting-dependent).
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn accounting(&self) -> ExplorationAccounting {
        self.accounting
    }

    /// Play slots in one exploration phase (N·γ under the staggered
    /// schedule; every player plays in every slot).
    pub fn explore_play_len(&self) -> u64 {
        self.arms as u64 * self.gamma as u64
    }

    /// Wall-clock slots booked for one exploration phase.
    pub fn explore_time_len(&self) -> u64 {
        self.explore_play_len() * self.accounting.stride(self.players)
    }

    pub fn exploit_len(&self) -> u64 {
        assert!(self.epoch < 63);
        1u64 << self.epoch
    }

    /// Consume one exploration play slot; true when the phase just ended
    /// and the matching must run.
    pub fn advance_explore(&mut self) -> bool {
        assert_eq!(self.phase, Phase::Explore);
        self.offset += 1;
        self.time += self.accounting.stride(self.players);
        if self.offset == self.explore_play_len() {
            self.phase = Phase::Exploit;
            self.offset = 0;
            true
        } else {
            false
        }
    }

    /// Consume the whole exploration phase in one step; the booked
    /// wall-clock slots, not the play slots, are returned. Dry-run helper.
    pub fn fast_forward_explore(&mut self) -> u64 {
        assert_eq!(self.phase, Phase::Explore);
        assert_eq!(self.offset, 0, "exploration already underway");
        let booked = self.explore_time_len();
        self.time += booked;
        self.phase = Phase::Exploit;
        self.offset = 0;
        booked
    }

    /// Consume up to `max_slots` exploitation slots; returns the count and
    /// rolls the epoch when the phase completes.
    pub fn fast_forward_exploit(&mut self, max_slots: u64) -> u64 {
        assert_eq!(self.phase, Phase::Exploit);
        let remaining = self.exploit_len() - self.offset;
        let consumed = remaining.min(max_slots);
        self.offset += consumed;
        self.time += consumed;
        if self.offset == self.exploit_len() {
            self.epoch += 1;
            self.phase = Phase::Explore;
            self.offset = 0;
            self.gamma = self.gamma_schedule.gamma_at(self.time, self.base);
            self.epsilon = self.epsilon_schedule.epsilon_at(self.time, self.base);
        }
        consumed
    }
}

/// Per-player state for the sample-mean multiplayer policy.
#[derive(Debug, Clone, PartialEq)]
pub struct De3Player {
    id: usize,
    sums: Vec<f64>,
    counts: Vec<u64>,
    assigned: Option<usize>,
}

impl De3Player {
    pub fn new(id: usize, arms: usize) -> Self {
        De3Player {
            id,
            sums: vec![0.0; arms],
            counts: vec![0; arms],
            assigned: None,
        }
    }

    /// Arm for this slot: staggered round-robin while exploring (player i
    /// plays `(i + offset) mod N`, so no two players ever collide), the
    /// matched arm while exploiting.
    pub fn act(&self, clock: &MultiEpochClock) -> usize {
        match clock.phase() {
            Phase::Explore => ((self.id as u64 + clock.offset()) % clock.arms() as u64) as usize,
            Phase::Exploit => self.assigned.expect("matching precedes exploitation"),
        }
    }

    pub fn observe(&mut self, clock: &MultiEpochClock, arm: usize, realized: f64) {
        if clock.phase() == Phase::Explore {
            self.sums[arm] += realized;
            self.counts[arm] += 1;
        }
    }

    /// This player's row of auction indices: exploration sample means.
    pub fn index_row(&self) -> Vec<f64> {
        assert!(self.counts.iter().all(|&c| c > 0));
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &n)| s / n as f64)
            .collect()
    }

    pub fn assign(&mut self, arm: usize) {
        self.assigned = Some(arm);
    }

    pub fn assigned(&self) -> Option<usize> {
        self.assigned
    }

    pub fn exploration_plays(&self, arm: usize) -> u64 {
        self.counts[arm]
    }
}

/// Per-player state for the posterior-sampling multiplayer policy.
#[derive(Debug, Clone, PartialEq)]
pub struct De3TsPlayer {
    id: usize,
    successes: Vec<u64>,
    failures: Vec<u64>,
    assigned: Option<usize>,
}

impl De3TsPlayer {
    pub fn new(id: usize, arms: usize) -> Self {
        De3TsPlayer {
            id,
            successes: vec![0; arms],
            failures: vec![0; arms],
            assigned: None,
        }
    }

    pub fn act(&self, clock: &MultiEpochClock) -> usize {
        match clock.phase() {
            Phase::Explore => ((self.id as u64 + clock.offset()) % clock.arms() as u64) as usize,
            Phase::Exploit => self.assigned.expect("matching precedes exploitation"),
        }
    }

    pub fn observe(
        &mut self,
        clock: &MultiEpochClock,
        arm: usize,
        realized: f64,
        trials: &mut RngStream,
    ) {
        if clock.phase() == Phase::Explore {
            if trials.bernoulli(realized) {
                self.successes[arm] += 1;
            } else {
                self.failures[arm] += 1;
            }
        }
    }

    /// This player's row of auction indices: fresh Beta posterior draws.
    pub fn index_row(&self, posterior: &mut RngStream) -> Vec<f64> {
        self.successes
            .iter()
            .zip(&self.failures)
            .map(|(&s, &f)| {
                Beta::new(s as f64 + 1.0, f as f64 + 1.0)
                    .expect("Beta parameters are ≥ 1")
                    .sample(posterior)
            })
            .collect()
    }

    pub fn assign(&mut self, arm: usize) {
        self.assigned = Some(arm);
    }

    pub fn assigned(&self) -> Option<usize> {
        self.assigned
    }

    pub fn counters(&self, arm: usize) -> (u64, u64) {
        (self.successes[arm], self.failures[arm])
    }
}

/// Coordination cost charged per matching invocation.
///
/// A matching costs M·N·C(ε): one unit cost per player-arm pair, with
/// C(ε) = 1/ε when precision itself is what costs. The single-player
/// selection analogue charges N·C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    Constant { cost: f64 },
    InverseEpsilon,
}

impl CostModel {
    pub fn unit_cost(&self, epsilon: f64) -> f64 {
        match *self {
            CostModel::Constant { cost } => cost,
            CostModel::InverseEpsilon => 1.0 / epsilon,
        }
    }

    pub fn charge_per_matching(&self, players: usize, arms: usize, epsilon: f64) -> f64 {
        (players * arms) as f64 * self.unit_cost(epsilon)
    }

    pub fn charge_per_selection(&self, arms: usize, epsilon: f64) -> f64 {
        arms as f64 * self.unit_cost(epsilon)
    }
}

/// Outcome of one end-of-exploration matching round.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMatching {
    pub matching: Matching,
    pub trace: AuctionTrace,
    /// Signaling slots the auction would have consumed.
    pub comm_slots: u64,
    /// Cost charged to the regret ledger for this invocation.
    pub cost_charged: f64,
}

/// Quantize the index matrix at ε₂ = ε, auction it at ε₁ = ε, and price the
/// invocation under the cost model.
pub fn run_epoch_matching(
    indices: &ValueMatrix,
    epsilon: f64,
    cost: &CostModel,
) -> Result<EpochMatching, MatchingError> {
    let quantized = indices.quantized(epsilon);
    let (matching, trace) = auction_run(&quantized, epsilon)?;
    debug_assert!(matching.is_complete());
    let cost_charged = cost.charge_per_matching(indices.players(), indices.arms(), epsilon);
    Ok(EpochMatching {
        comm_slots: trace.comm_slots,
        matching,
        trace,
        cost_charged,
    })
}
