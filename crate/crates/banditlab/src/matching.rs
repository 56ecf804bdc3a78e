//! ε-optimal distributed bipartite matching.
//!
//! The matcher is an auction run as a synchronous round protocol: every
//! unassigned player bids on their best net-value arm each round, the
//! highest bidder wins the arm, and the winning bid is added to the arm's
//! price. Bids carry a minimum increment of ε/M, which is what bounds both
//! the iteration count and the final suboptimality. An exhaustive oracle
//! over all injective assignments provides the ground truth the auction is
//! checked against.

use std::fmt;

use crate::argmax_lowest;

#[derive(Debug, Clone, PartialEq)]
pub enum MatchingError {
    EmptyMatrix,
    RaggedMatrix,
    ValueOutOfRange(f64),
    MorePlayersThanArms {
        players: usize,
        arms: usize,
    },
    NonPositiveEpsilon(f64),
    /// The exhaustive oracle refuses matrices wider than this.
    OracleTooLarge {
        arms: usize,
    },
    /// The auction exceeded its convergence bound; a protocol defect.
    Diverged {
        iterations: usize,
        bound: usize,
    },
    NonInjective,
}

impl fmt::Display for MatchingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingError::EmptyMatrix => write!(f, "value matrix is empty"),
            MatchingError::RaggedMatrix => write!(f, "value matrix rows have unequal lengths"),
            MatchingError::ValueOutOfRange(v) => write!(f, "value {v} outside [0, 1]"),
            MatchingError::MorePlayersThanArms { players, arms } => {
                write!(f, "{players} players cannot injectively match {arms} arms")
            }
            MatchingError::NonPositiveEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
            MatchingError::OracleTooLarge { arms } => {
                write!(
                    f,
                    "exhaustive oracle limited to {MAX_ORACLE_ARMS} arms, got {arms}"
                )
            }
            MatchingError::Diverged { iterations, bound } => write!(
                f,
                "auction ran {iterations} rounds, exceeding its convergence bound of {bound}"
            ),
            MatchingError::NonInjective => write!(f, "assignment maps two players to one arm"),
        }
    }
}

impl std::error::Error for MatchingError {}

pub const MAX_ORACLE_ARMS: usize = 8;

/// Player-by-arm values in `[0, 1]` (true means, sample means, or posterior
/// draws — whatever indices the caller wants matched).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMatrix {
    values: Vec<f64>,
    players: usize,
    arms: usize,
}

impl ValueMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MatchingError> {
        let players = rows.len();
        let arms = rows.first().map_or(0, Vec::len);
        if players == 0 || arms == 0 {
            return Err(MatchingError::EmptyMatrix);
        }
        if rows.iter().any(|r| r.len() != arms) {
            return Err(MatchingError::RaggedMatrix);
        }
        if players > arms {
            return Err(MatchingError::MorePlayersThanArms { players, arms });
        }
        let mut values = Vec::with_capacity(players * arms);
        for row in &rows {
            for &v in row {
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(MatchingError::ValueOutOfRange(v));
                }
                values.push(v);
            }
        }
        Ok(ValueMatrix {
            values,
            players,
            arms,
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn get(&self, player: usize, arm: usize) -> f64 {
        self.values[player * self.arms + arm]
    }

    pub fn row(&self, player: usize) -> &[f64] {
        &self.values[player * self.arms..(player + 1) * self.arms]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Entry-wise quantization at resolution `eps2`.
    pub fn quantized(&self, eps2: f64) -> ValueMatrix {
        let values = self.values.iter().map(|&v| quantize(v, eps2)).collect();
        ValueMatrix {
            values,
            players: self.players,
            arms: self.arms,
        }
    }
}

/// Round `x` down to the lattice `{0, ε₂, 2ε₂, ...}`.
///
/// Exact multiples of `ε₂` are fixed points; a small guard keeps binary
/// round-off (`0.3/0.1 = 2.999…`) from dropping a full step.
pub fn quantize(x: f64, eps2: f64) -> f64 {
    assert!(eps2 > 0.0, "quantization step must be positive");
    ((x / eps2 + 1e-9).floor() * eps2).min(1.0)
}

/// Per-arm prices. Prices only ever rise, by the winning bid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector {
    prices: Vec<f64>,
}

impl PriceVector {
    pub fn zeros(arms: usize) -> Self {
        PriceVector {
            prices: vec![0.0; arms],
        }
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.prices[arm]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }

    fn raise(&mut self, arm: usize, amount: f64) {
        debug_assert!(amount > 0.0, "price increments must be positive");
        self.prices[arm] += amount;
    }
}

/// One player's sealed bid for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bid {
    pub player: usize,
    pub arm: usize,
    pub amount: f64,
}

/// An injective (partial) assignment of players to arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    assigned: Vec<Option<usize>>,
}

impl Matching {
    pub fn unassigned(players: usize) -> Self {
        Matching {
            assigned: vec![None; players],
        }
    }

    /// Build from explicit per-player arms, rejecting duplicate arms.
    pub fn from_assignments(assigned: Vec<Option<usize>>) -> Result<Self, MatchingError> {
        let mut seen = Vec::new();
        for arm in assigned.iter().flatten() {
            if seen.contains(arm) {
                return Err(MatchingError::NonInjective);
            }
            seen.push(*arm);
        }
        Ok(Matching { assigned })
    }

    pub fn players(&self) -> usize {
        self.assigned.len()
    }

    pub fn arm_of(&self, player: usize) -> Option<usize> {
        self.assigned[player]
    }

    pub fn assignments(&self) -> &[Option<usize>] {
        &self.assigned
    }

    pub fn is_complete(&self) -> bool {
        self.assigned.iter().all(Option::is_some)
    }

    /// Sum of matrix values along the assignment. Unassigned players add 0.
    pub fn surplus(&self, values: &ValueMatrix) -> f64 {
        self.assigned
            .iter()
            .enumerate()
            .filter_map(|(player, arm)| arm.map(|a| values.get(player, a)))
            .sum()
    }

    fn holder_of(&self, arm: usize) -> Option<usize> {
        self.assigned.iter().position(|a| *a == Some(arm))
    }
}

/// Everything the auction did on the way to its matching.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionTrace {
    /// Number of synchronous bidding rounds.
    pub iterations: usize,
    /// All bids submitted, per round.
    pub rounds: Vec<Vec<Bid>>,
    pub final_prices: Vec<f64>,
    /// Convergence bound ⌈M²·max value / ε⌉ the run was held to.
    pub iteration_bound: usize,
    /// Signaling slots consumed: one per player per round (zero when a
    /// single player needs no coordination).
    pub comm_slots: u64,
    /// Bits to signal a preferred arm.
    pub pref_bits: u32,
    /// Bits to signal a bid value at resolution ε.
    pub bid_bits: u32,
}

impl AuctionTrace {
    pub fn bits_per_message(&self) -> u32 {
        self.pref_bits + self.bid_bits
    }
}

/// Communication accounting for a signaling-based auction round-robin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommReport {
    pub slots: u64,
    pub pref_bits: u32,
    pub bid_bits: u32,
}

impl CommReport {
    pub fn bits_per_message(&self) -> u32 {
        self.pref_bits + self.bid_bits
    }
}

/// Slots and per-message bit widths for `iterations` rounds of signaling.
///
/// Preferences identify an arm (⌈log₂ N⌉ bits); bid values are quantized at
/// ε₁ (⌈log₂ 1/ε₁⌉ bits). One slot per player per round; a lone player has
/// nobody to coordinate with and spends no slots.
pub fn comm_slots(players: usize, arms: usize, eps1: f64, iterations: usize) -> CommReport {
    assert!(
        eps1 > 0.0 && eps1 < 1.0,
        "signaling resolution must be in (0, 1)"
    );
    assert!(iterations >= 1);
    let slots = if players <= 1 {
        0
    } else {
        (iterations * players) as u64
    };
    CommReport {
        slots,
        pref_bits: ceil_log2(arms),
        bid_bits: ceil_log2_inv(eps1),
    }
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn ceil_log2_inv(eps: f64) -> u32 {
    let raw = (1.0 / eps).log2();
    (raw - 1e-12).ceil().max(0.0) as u32
}

/// A player's preferred arm and bid against the current prices: the gap
/// between their two best net values plus the ε/M minimum increment.
///
/// With a single arm there is no second-best; its net value is floored at
/// zero so the bid stays positive and bounded.
pub fn preferred_and_bid(
    player: usize,
    values_row: &[f64],
    prices: &PriceVector,
    epsilon: f64,
    players: usize,
) -> Bid {
    assert!(!values_row.is_empty());
    assert_eq!(values_row.len(), prices.as_slice().len());
    assert!(epsilon > 0.0);
    let nets: Vec<f64> = values_row
        .iter()
        .zip(prices.as_slice())
        .map(|(v, p)| v - p)
        .collect();
    let arm = argmax_lowest(&nets);
    let second = nets
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != arm)
        .map(|(_, &n)| n)
        .fold(f64::NEG_INFINITY, f64::max);
    let second = if second.is_finite() { second } else { 0.0 };
    Bid {
        player,
        arm,
        amount: nets[arm] - second + epsilon / players as f64,
    }
}

/// Run the auction to a complete matching within `epsilon` of optimal.
///
/// Rounds are simultaneous: every unassigned player bids, then each
/// contested arm goes to its highest bidder (ties to the lowest player
/// index), displacing any previous holder, and the arm's price rises by the
/// winning bid. Deterministic: the same matrix and ε replay the same trace.
pub fn auction_run(
    values: &ValueMatrix,
    epsilon: f64,
) -> Result<(Matching, AuctionTrace), MatchingError> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(MatchingError::NonPositiveEpsilon(epsilon));
    }
    let players = values.players();
    let arms = values.arms();
    let bound = ((players * players) as f64 * values.max_value() / epsilon).ceil() as usize;
    // The convergence bound is vacuous for all-zero matrices, but a round can
    // assign at most one previously idle player, so M rounds is a floor.
    let hard_cap = bound.max(players);

    let mut matching = Matching::unassigned(players);
    let mut prices = PriceVector::zeros(arms);
    let mut rounds: Vec<Vec<Bid>> = Vec::new();

    while !matching.is_complete() {
        if rounds.len() >= hard_cap {
            return Err(MatchingError::Diverged {
                iterations: rounds.len(),
                bound: hard_cap,
            });
        }
        let bids: Vec<Bid> = (0..players)
            .filter(|&p| matching.arm_of(p).is_none())
            .map(|p| preferred_and_bid(p, values.row(p), &prices, epsilon, players))
            .collect();
        // Highest bid per arm wins; bids arrive in player order, so strict
        // comparison keeps the lowest player index on ties.
        let mut winner: Vec<Option<(usize, f64)>> = vec![None; arms];
        for bid in &bids {
            match winner[bid.arm] {
                Some((_, amount)) if amount >= bid.amount => {}
                _ => winner[bid.arm] = Some((bid.player, bid.amount)),
            }
        }
        for (arm, win) in winner.iter().enumerate() {
            if let Some((player, amount)) = *win {
                if let Some(previous) = matching.holder_of(arm) {
                    matching.assigned[previous] = None;
                }
                matching.assigned[player] = Some(arm);
                prices.raise(arm, amount);
            }
        }
        rounds.push(bids);
    }

    let iterations = rounds.len();
    let comm = comm_slots(players, arms, epsilon, iterations.max(1));
    let trace = AuctionTrace {
        iterations,
        rounds,
        final_prices: prices.as_slice().to_vec(),
        iteration_bound: bound,
        comm_slots: comm.slots,
        pref_bits: comm.pref_bits,
        bid_bits: comm.bid_bits,
    };
    Ok((matching, trace))
}

/// Exhaustive optimum over all injective player→arm assignments.
///
/// Ties resolve to the lexicographically smallest assignment. Guarded to
/// small instances; this is the oracle the auction is validated against.
pub fn brute_force(values: &ValueMatrix) -> Result<(Matching, f64), MatchingError> {
    if values.arms() > MAX_ORACLE_ARMS {
        return Err(MatchingError::OracleTooLarge {
            arms: values.arms(),
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_assignment(values.players(), values.arms(), |assignment| {
        let surplus: f64 = assignment
            .iter()
            .enumerate()
            .map(|(player, &arm)| values.get(player, arm))
            .sum();
        // Strictly-greater keeps the first (lexicographically smallest) of
        // any tied assignments, since enumeration is lexicographic.
        match &best {
            Some((_, s)) if *s >= surplus => {}
            _ => best = Some((assignment.to_vec(), surplus)),
        }
    });
    let (assignment, surplus) = best.expect("at least one assignment exists");
    let matching = Matching {
        assigned: assignment.into_iter().map(Some).collect(),
    };
    Ok((matching, surplus))
}

/// Visit every injective map of `players` into `arms`, lexicographically.
///
/// Requires `players ≤ arms`. The visitor borrows the assignment slice for
/// the duration of the call.
pub fn for_each_assignment(players: usize, arms: usize, mut visit: impl FnMut(&[usize])) {
    assert!(players >= 1 && players <= arms);
    let mut assignment = vec![0usize; players];
    let mut used = vec![false; arms];
    fn recur(
        player: usize,
        players: usize,
        arms: usize,
        assignment: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if player == players {
            visit(assignment);
            return;
        }
        for arm in 0..arms {
            if !used[arm] {
                used[arm] = true;
                assignment[player] = arm;
                recur(player + 1, players, arms, assignment, used, visit);
                used[arm] = false;
            }
        }
    }
    recur(0, players, arms, &mut assignment, &mut used, &mut visit);
}
