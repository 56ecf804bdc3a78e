//! Seeded replication runners.
//!
//! Phased policies are simulated exactly during exploration and
//! fast-forwarded through exploitation phases (the policy state is frozen
//! there and pseudo-regret grows linearly, so grid points inside a phase
//! are interpolated, not stepped). Baselines step every slot. Each
//! replication is self-contained: its streams are keyed by (purpose,
//! player, replication), so runs are independent and reorderable.

use crate::env::{
    gap_summary, resolve_collisions, GapSummary, RngStream, StreamKey, StreamPurpose, GAP_EPSILON,
};
use crate::harness::config::{ExperimentConfig, Horizon, PolicyKind};
use crate::harness::HarnessError;
use crate::matching::ValueMatrix;
use crate::policy::multi::{run_epoch_matching, De3Player, De3TsPlayer, MultiEpochClock};
use crate::policy::single::{E3State, E3TsState, EpochClock, Phase, Transition, Ucb1State};
use crate::regret::{
    bound_de3, bound_de3ts, bound_e3, bound_e3ts, bound_ucb1, BoundSpec, MultiSlotRecord,
    RegretLedger, SlotPhase, TrajectoryRecord,
};

/// Full per-slot history of one run, for oracle recomputation in tests.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunHistory {
    pub slots: Vec<MultiSlotRecord>,
    pub cost_charges: Vec<f64>,
}

/// One replication's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    pub ledger: RegretLedger,
    /// Collisions observed during exploration phases (must be zero for the
    /// staggered schedule).
    pub explore_collisions: u64,
    pub history: Option<RunHistory>,
}

/// All replications plus the cross-run aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    /// Component-wise mean trajectory across runs.
    pub mean: Vec<TrajectoryRecord>,
    /// Standard deviation of the total at each logged point.
    pub std_total: Vec<f64>,
}

impl ExperimentOutput {
    pub fn final_mean_total(&self) -> f64 {
        self.mean.last().map_or(0.0, |r| r.total)
    }
}

/// Run every replication of the experiment and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let mut runs = Vec::with_capacity(cfg.replications as usize);
    for rep in 0..cfg.replications {
        runs.push(run_one(cfg, rep)?);
    }
    let mean = mean_trajectory(&runs);
    let std_total = std_of_totals(&runs, &mean);
    Ok(ExperimentOutput {
        runs,
        mean,
        std_total,
    })
}

/// Run a single replication.
pub fn run_one(cfg: &ExperimentConfig, replication: u32) -> Result<RunOutput, HarnessError> {
    match cfg.policy.kind() {
        PolicyKind::E3 | PolicyKind::E3Ts => run_single_phased(cfg, replication),
        PolicyKind::Ucb1 | PolicyKind::Ts => run_single_baseline(cfg, replication),
        PolicyKind::De3 | PolicyKind::De3Ts => run_multi_phased(cfg, replication),
    }
}

/// Wall-clock horizon of the run: explicit for slot horizons, a dry clock
/// walk for epoch horizons.
pub fn total_slots(cfg: &ExperimentConfig) -> Result<u64, HarnessError> {
    match cfg.horizon {
        Horizon::Slots(t) => Ok(t),
        Horizon::Epochs(epochs) => {
            if cfg.policy.kind().is_multi() {
                let mut clock = multi_clock(cfg);
                while clock.epoch() <= epochs {
                    clock.fast_forward_explore();
                    clock.fast_forward_exploit(u64::MAX);
                }
                Ok(clock.time())
            } else {
                let mut clock = single_clock(cfg);
                while clock.epoch() <= epochs {
                    clock.fast_forward_explore();
                    clock.fast_forward_exploit(u64::MAX);
                }
                Ok(clock.slot())
            }
        }
    }
}

fn single_clock(cfg: &ExperimentConfig) -> EpochClock {
    let schedule = cfg
        .policy
        .gamma_schedule()
        .expect("phased policy has a gamma schedule");
    EpochClock::new(cfg.instance.num_arms(), schedule, cfg.log_base)
}

fn multi_clock(cfg: &ExperimentConfig) -> MultiEpochClock {
    MultiEpochClock::new(
        cfg.instance.num_players(),
        cfg.instance.num_arms(),
        cfg.policy
            .gamma_schedule()
            .expect("phased policy has a gamma schedule"),
        cfg.policy
            .epsilon_schedule()
            .expect("multiplayer policy has an epsilon schedule"),
        cfg.accounting,
        cfg.log_base,
    )
}

/// A theoretical curve evaluated on the logging grid.
pub type BoundCurve = Box<dyn Fn(u64) -> f64>;

/// The theoretical curve logged alongside a trajectory, when one applies:
/// fixed-γ phased policies get their guarantee curve, UCB1 its reference
/// bound. Growing-γ schedules and plain TS get none.
pub fn bound_fn(cfg: &ExperimentConfig) -> Result<Option<BoundCurve>, HarnessError> {
    let summary = gap_summary(&cfg.instance)?;
    let (delta_min, delta_max) = (summary.delta_min(), summary.delta_max());
    let kind = cfg.policy.kind();
    let gamma = match cfg.policy.gamma_schedule() {
        Some(crate::policy::single::GammaSchedule::Known { gamma }) => Some(gamma),
        _ => None,
    };
    let cost_unit = match (cfg.cost, cfg.policy.epsilon_schedule()) {
        (crate::policy::multi::CostModel::Constant { cost }, _) => Some(cost),
        (
            crate::policy::multi::CostModel::InverseEpsilon,
            Some(crate::policy::multi::EpsilonSchedule::Fixed { epsilon }),
        ) => Some(1.0 / epsilon),
        _ => None,
    };
    let spec = BoundSpec {
        arms: cfg.instance.num_arms(),
        players: cfg.instance.num_players(),
        delta_min,
        delta_max,
        gamma: gamma.unwrap_or(0),
        cost: cost_unit.unwrap_or(0.0),
        delta: None,
        base: cfg.log_base,
    };
    Ok(match (kind, gamma, cost_unit) {
        (PolicyKind::E3, Some(_), Some(_)) => Some(Box::new(move |t| bound_e3(t, &spec))),
        (PolicyKind::E3Ts, Some(_), Some(_)) => Some(Box::new(move |t| bound_e3ts(t, &spec))),
        (PolicyKind::De3, Some(_), Some(_)) => Some(Box::new(move |t| bound_de3(t, &spec))),
        (PolicyKind::De3Ts, Some(_), Some(_)) => Some(Box::new(move |t| bound_de3ts(t, &spec))),
        (PolicyKind::Ucb1, _, _) => {
            let gaps = match summary {
                GapSummary::Single { gaps, .. } => gaps,
                GapSummary::Multi { .. } => unreachable!("ucb1 is single-player"),
            };
            Some(Box::new(move |t| bound_ucb1(t, &gaps)))
        }
        _ => None,
    })
}

/// Logging grid: every slot up to 32, then the geometric points ⌈1.2^k⌉,
/// plus the final slot. Epoch boundaries are added during the run.
fn build_grid(horizon: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..=horizon.min(32)).collect();
    let mut power = 1.2f64;
    loop {
        let point = power.ceil() as u64;
        if point > horizon {
            break;
        }
        if point > 32 {
            grid.push(point);
        }
        power *= 1.2;
    }
    grid.push(horizon);
    grid.sort_unstable();
    grid.dedup();
    grid
}

struct Recorder {
    grid: Vec<u64>,
    next: usize,
    records: Vec<TrajectoryRecord>,
    bound: Option<BoundCurve>,
}

impl Recorder {
    fn new(grid: Vec<u64>, bound: Option<BoundCurve>) -> Self {
        Recorder {
            grid,
            next: 0,
            records: Vec::new(),
            bound,
        }
    }

    fn bound_at(&self, t: u64) -> Option<f64> {
        self.bound.as_ref().map(|f| f(t))
    }

    /// Emit every grid point now reached. Pending points strictly below
    /// `now` (jumped by a coarse time stride) take the current cumulative.
    fn emit_due(&mut self, now: u64, epoch: u32, ledger: &RegretLedger) {
        while self.next < self.grid.len() && self.grid[self.next] <= now {
            let t = self.grid[self.next];
            let record = ledger.snapshot(t, epoch, self.bound_at(t));
            self.push(record);
            self.next += 1;
        }
    }

    /// Emit grid points inside an exploitation span (t0, t0+span] where the
    /// exploit component grows by `rate` per slot from the ledger's state.
    fn emit_exploit_span(
        &mut self,
        t0: u64,
        span: u64,
        rate: f64,
        epoch: u32,
        ledger: &RegretLedger,
    ) {
        while self.next < self.grid.len() && self.grid[self.next] <= t0 + span {
            let t = self.grid[self.next];
            let elapsed = t.saturating_sub(t0) as f64;
            let mut record = ledger.snapshot(t, epoch, self.bound_at(t));
            record.exploit += rate * elapsed;
            record.total += rate * elapsed;
            self.push(record);
            self.next += 1;
        }
    }

    /// Unconditional record (epoch boundaries), deduplicated against any
    /// grid point just emitted at the same slot.
    fn emit_now(&mut self, t: u64, epoch: u32, ledger: &RegretLedger) {
        let record = ledger.snapshot(t, epoch, self.bound_at(t));
        self.push(record);
    }

    /// Make sure the trajectory ends with a record at `t`; existing records
    /// there are left alone.
    fn finalize(&mut self, t: u64, epoch: u32, ledger: &RegretLedger) {
        if self.records.last().map(|r| r.t) != Some(t) {
            self.emit_now(t, epoch, ledger);
        }
    }

    fn push(&mut self, record: TrajectoryRecord) {
        if self.records.last().map(|r| r.t) == Some(record.t) {
            *self.records.last_mut().unwrap() = record;
        } else {
            debug_assert!(self.records.last().is_none_or(|r| r.t < record.t));
            self.records.push(record);
        }
    }
}

enum SinglePhased {
    E3(E3State),
    E3Ts(E3TsState),
}

fn run_single_phased(cfg: &ExperimentConfig, replication: u32) -> Result<RunOutput, HarnessError> {
    let summary = gap_summary(&cfg.instance)?;
    let gaps = match &summary {
        GapSummary::Single { gaps, .. } => gaps.clone(),
        GapSummary::Multi { .. } => unreachable!("single policy on single instance"),
    };
    let arms = cfg.instance.num_arms();
    let horizon = total_slots(cfg)?;
    let mut recorder = Recorder::new(build_grid(horizon), bound_fn(cfg)?);
    let mut clock = single_clock(cfg);
    let mut ledger = RegretLedger::new(1, arms);
    let mut rewards = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Reward, 0, replication),
    );
    let mut trials = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Trial, 0, replication),
    );
    let mut posterior = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Posterior, 0, replication),
    );
    let mut policy = match cfg.policy.kind() {
        PolicyKind::E3 => SinglePhased::E3(E3State::new(arms)),
        _ => SinglePhased::E3Ts(E3TsState::new(arms)),
    };

    let mut t = 0u64;
    while t < horizon {
        match clock.phase() {
            Phase::Explore => {
                let arm = match &policy {
                    SinglePhased::E3(s) => s.act(&clock),
                    SinglePhased::E3Ts(s) => s.act(&clock),
                };
                let reward = cfg.instance.arm(0, arm).sample_reward(&mut rewards);
                match &mut policy {
                    SinglePhased::E3(s) => s.observe(&clock, arm, reward),
                    SinglePhased::E3Ts(s) => s.observe(&clock, arm, reward, &mut trials),
                }
                ledger.charge_explore(gaps[arm]);
                ledger.record_plays(0, arm, 1);
                t += 1;
                let epoch = clock.epoch();
                if clock.advance() == Transition::SelectionDue {
                    match &mut policy {
                        SinglePhased::E3(s) => {
                            s.select();
                        }
                        SinglePhased::E3Ts(s) => {
                            s.select(&mut posterior);
                        }
                    }
                    ledger.charge_comm(cfg.cost.charge_per_selection(arms, 1.0));
                    ledger.record_matching();
                }
                recorder.emit_due(t, epoch, &ledger);
            }
            Phase::Exploit => {
                let chosen = match &policy {
                    SinglePhased::E3(s) => s.chosen(),
                    SinglePhased::E3Ts(s) => s.chosen(),
                }
                .expect("selection happened at the phase boundary");
                let rate = gaps[chosen];
                let epoch = clock.epoch();
                let span = clock.fast_forward_exploit(horizon - t);
                recorder.emit_exploit_span(t, span, rate, epoch, &ledger);
                ledger.charge_exploit(rate * span as f64);
                ledger.record_plays(0, chosen, span);
                t += span;
                if clock.epoch() == epoch + 1 {
                    recorder.emit_now(t, epoch, &ledger);
                }
            }
        }
    }
    let epoch = clock.epoch();
    recorder.finalize(t, epoch, &ledger);
    Ok(RunOutput {
        records: recorder.records,
        ledger,
        explore_collisions: 0,
        history: None,
    })
}

fn run_single_baseline(
    cfg: &ExperimentConfig,
    replication: u32,
) -> Result<RunOutput, HarnessError> {
    let summary = gap_summary(&cfg.instance)?;
    let gaps = match &summary {
        GapSummary::Single { gaps, .. } => gaps.clone(),
        GapSummary::Multi { .. } => unreachable!("baseline on single instance"),
    };
    let arms = cfg.instance.num_arms();
    let horizon = total_slots(cfg)?;
    let mut recorder = Recorder::new(build_grid(horizon), bound_fn(cfg)?);
    let mut ledger = RegretLedger::new(1, arms);
    let mut rewards = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Reward, 0, replication),
    );
    let mut trials = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Trial, 0, replication),
    );
    let mut posterior = RngStream::new(
        cfg.seed,
        StreamKey::new(StreamPurpose::Posterior, 0, replication),
    );
    let is_ucb = cfg.policy.kind() == PolicyKind::Ucb1;
    let mut ucb = Ucb1State::new(arms);
    let mut ts = crate::policy::single::TsState::new(arms);
    // Baselines recompute indices every slot; that is exactly what makes
    // them cost-fragile, so each slot is a charge event.
    let slot_cost = cfg.cost.charge_per_selection(arms, 1.0);

    for t in 1..=horizon {
        let arm = if is_ucb {
            ucb.act(t)
        } else {
            ts.act(&mut posterior)
        };
        let reward = cfg.instance.arm(0, arm).sample_reward(&mut rewards);
        if is_ucb {
            ucb.observe(arm, reward);
        } else {
            ts.observe(arm, reward, &mut trials);
        }
        ledger.charge_exploit(gaps[arm]);
        ledger.record_plays(0, arm, 1);
        if slot_cost > 0.0 {
            ledger.charge_comm(slot_cost);
            ledger.record_matching();
        }
        recorder.emit_due(t, 0, &ledger);
    }
    recorder.finalize(horizon, 0, &ledger);
    Ok(RunOutput {
        records: recorder.records,
        ledger,
        explore_collisions: 0,
        history: None,
    })
}

enum MultiPhased {
    De3(Vec<De3Player>),
    De3Ts(Vec<De3TsPlayer>),
}

impl MultiPhased {
    fn act_all(&self, clock: &MultiEpochClock) -> Vec<usize> {
        match self {
            MultiPhased::De3(players) => players.iter().map(|p| p.act(clock)).collect(),
            MultiPhased::De3Ts(players) => players.iter().map(|p| p.act(clock)).collect(),
        }
    }

    fn assign_all(&mut self, arms: &[Option<usize>]) {
        match self {
            MultiPhased::De3(players) => {
                for (p, arm) in players.iter_mut().zip(arms) {
                    p.assign(arm.expect("complete matching"));
                }
            }
            MultiPhased::De3Ts(players) => {
                for (p, arm) in players.iter_mut().zip(arms) {
                    p.assign(arm.expect("complete matching"));
                }
            }
        }
    }
}

fn run_multi_phased(cfg: &ExperimentConfig, replication: u32) -> Result<RunOutput, HarnessError> {
    let summary = gap_summary(&cfg.instance)?;
    let (optimal_surplus, means) = match &summary {
        GapSummary::Multi {
            optimal_surplus, ..
        } => (*optimal_surplus, cfg.instance.mean_matrix()),
        GapSummary::Single { .. } => unreachable!("multi policy on multi instance"),
    };
    let players_n = cfg.instance.num_players();
    let arms = cfg.instance.num_arms();
    let horizon = total_slots(cfg)?;
    let epoch_cap = match cfg.horizon {
        Horizon::Epochs(l) => Some(l),
        Horizon::Slots(_) => None,
    };
    let mut recorder = Recorder::new(build_grid(horizon), bound_fn(cfg)?);
    let mut ledger = RegretLedger::new(players_n, arms);
    let mut clock = multi_clock(cfg);
    let mut reward_streams: Vec<RngStream> = (0..players_n)
        .map(|p| {
            RngStream::new(
                cfg.seed,
                StreamKey::new(StreamPurpose::Reward, p, replication),
            )
        })
        .collect();
    let mut trial_streams: Vec<RngStream> = (0..players_n)
        .map(|p| {
            RngStream::new(
                cfg.seed,
                StreamKey::new(StreamPurpose::Trial, p, replication),
            )
        })
        .collect();
    let mut posterior_streams: Vec<RngStream> = (0..players_n)
        .map(|p| {
            RngStream::new(
                cfg.seed,
                StreamKey::new(StreamPurpose::Posterior, p, replication),
            )
        })
        .collect();
    let mut policy = match cfg.policy.kind() {
        PolicyKind::De3 => {
            MultiPhased::De3((0..players_n).map(|i| De3Player::new(i, arms)).collect())
        }
        _ => MultiPhased::De3Ts((0..players_n).map(|i| De3TsPlayer::new(i, arms)).collect()),
    };
    let mut history = cfg.capture_history.then(RunHistory::default);
    let mut explore_collisions = 0u64;
    let mut t = 0u64;
    // Gap of the currently exploited matching, snapped to zero inside the
    // float-noise floor so optimal matchings charge exactly nothing.
    let mut current_gap = 0.0f64;

    while t < horizon && epoch_cap.is_none_or(|cap| clock.epoch() <= cap) {
        match clock.phase() {
            Phase::Explore => {
                let actions = policy.act_all(&clock);
                let drawn: Vec<f64> = actions
                    .iter()
                    .enumerate()
                    .map(|(p, &arm)| {
                        cfg.instance
                            .arm(p, arm)
                            .sample_reward(&mut reward_streams[p])
                    })
                    .collect();
                let action_opts: Vec<Option<usize>> = actions.iter().copied().map(Some).collect();
                let realized = resolve_collisions(&action_opts, &drawn);
                let mut deficit = optimal_surplus;
                for (p, &arm) in actions.iter().enumerate() {
                    let contested = actions.iter().enumerate().any(|(q, &a)| q != p && a == arm);
                    if contested {
                        explore_collisions += 1;
                    } else {
                        deficit -= means[p][arm];
                    }
                    match &mut policy {
                        MultiPhased::De3(players) => players[p].observe(&clock, arm, realized[p]),
                        MultiPhased::De3Ts(players) => {
                            players[p].observe(&clock, arm, realized[p], &mut trial_streams[p])
                        }
                    }
                    ledger.record_plays(p, arm, 1);
                }
                // Optimal-play slots sum to the optimum only up to float
                // noise; snap that to an exact zero charge.
                let deficit = if deficit.abs() <= GAP_EPSILON { 0.0 } else { deficit };
                ledger.charge_explore(deficit.max(0.0));
                if let Some(h) = history.as_mut() {
                    let contested_flags: Vec<bool> = actions
                        .iter()
                        .enumerate()
                        .map(|(p, &arm)| {
                            actions.iter().enumerate().any(|(q, &a)| q != p && a == arm)
                        })
                        .collect();
                    h.slots.push(MultiSlotRecord {
                        phase: SlotPhase::Explore,
                        actions: action_opts,
                        collided: contested_flags,
                    });
                }
                let epoch = clock.epoch();
                let epsilon = clock.epsilon();
                let phase_done = clock.advance_explore();
                t = clock.time();
                if phase_done {
                    let rows: Vec<Vec<f64>> = match &mut policy {
                        MultiPhased::De3(players) => {
                            players.iter().map(|p| p.index_row()).collect()
                        }
                        MultiPhased::De3Ts(players) => players
                            .iter()
                            .zip(posterior_streams.iter_mut())
                            .map(|(p, stream)| p.index_row(stream))
                            .collect(),
                    };
                    let indices = ValueMatrix::new(rows)?;
                    let outcome = run_epoch_matching(&indices, epsilon, &cfg.cost)?;
                    policy.assign_all(outcome.matching.assignments());
                    ledger.charge_comm(outcome.cost_charged);
                    ledger.record_matching();
                    if let Some(h) = history.as_mut() {
                        h.cost_charges.push(outcome.cost_charged);
                    }
                    let matched: f64 = outcome
                        .matching
                        .assignments()
                        .iter()
                        .enumerate()
                        .map(|(p, arm)| means[p][arm.expect("complete matching")])
                        .sum();
                    current_gap = optimal_surplus - matched;
                    if current_gap.abs() <= GAP_EPSILON {
                        current_gap = 0.0;
                    }
                }
                recorder.emit_due(t, epoch, &ledger);
            }
            Phase::Exploit => {
                let epoch = clock.epoch();
                let budget = horizon - t;
                let span = clock.fast_forward_exploit(budget);
                recorder.emit_exploit_span(t, span, current_gap, epoch, &ledger);
                ledger.charge_exploit(current_gap * span as f64);
                record_exploit_plays(&mut ledger, &policy, span);
                if let Some(h) = history.as_mut() {
                    let actions: Vec<Option<usize>> = assigned_arms(&policy);
                    for _ in 0..span {
                        h.slots.push(MultiSlotRecord {
                            phase: SlotPhase::Exploit,
                            actions: actions.clone(),
                            collided: vec![false; players_n],
                        });
                    }
                }
                t += span;
                if clock.epoch() == epoch + 1 {
                    recorder.emit_now(t, epoch, &ledger);
                }
            }
        }
    }
    recorder.finalize(t, clock.epoch().max(1), &ledger);
    Ok(RunOutput {
        records: recorder.records,
        ledger,
        explore_collisions,
        history,
    })
}

fn assigned_arms(policy: &MultiPhased) -> Vec<Option<usize>> {
    match policy {
        MultiPhased::De3(players) => players.iter().map(|p| p.assigned()).collect(),
        MultiPhased::De3Ts(players) => players.iter().map(|p| p.assigned()).collect(),
    }
}

fn record_exploit_plays(ledger: &mut RegretLedger, policy: &MultiPhased, span: u64) {
    for (p, arm) in assigned_arms(policy).iter().enumerate() {
        ledger.record_plays(p, arm.expect("assigned during exploitation"), span);
    }
}

fn mean_trajectory(runs: &[RunOutput]) -> Vec<TrajectoryRecord> {
    let first = &runs[0].records;
    let n = runs.len() as f64;
    first
        .iter()
        .enumerate()
        .map(|(i, proto)| {
            debug_assert!(runs.iter().all(|r| r.records[i].t == proto.t));
            let mut mean = TrajectoryRecord {
                t: proto.t,
                total: 0.0,
                explore: 0.0,
                exploit: 0.0,
                comm: 0.0,
                epoch: proto.epoch,
                bound: proto.bound,
            };
            for run in runs {
                let r = &run.records[i];
                mean.total += r.total;
                mean.explore += r.explore;
                mean.exploit += r.exploit;
                mean.comm += r.comm;
            }
            mean.total /= n;
            mean.explore /= n;
            mean.exploit /= n;
            mean.comm /= n;
            mean
        })
        .collect()
}

fn std_of_totals(runs: &[RunOutput], mean: &[TrajectoryRecord]) -> Vec<f64> {
    let n = runs.len() as f64;
    mean.iter()
        .enumerate()
        .map(|(i, m)| {
            let variance: f64 = runs
                .iter()
                .map(|r| (r.records[i].total - m.total).powi(2))
                .sum::<f64>()
                / n;
            variance.sqrt()
        })
        .collect()
}
