//! Ground-truth reward models, collision semantics, gap computation, and
//! deterministic random-number streams.
//!
//! Rewards always have support inside `[0, 1]`. Instances are either a
//! single player facing `N` arms or `M ≤ N` players facing a player-by-arm
//! mean matrix, where two players picking the same arm in the same slot
//! collide and both earn zero.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::argmax_lowest;
use crate::matching::for_each_assignment;

/// Gaps no larger than this are treated as exact ties when classifying
/// optimal arms or matchings. Float summation noise sits near 1e-16 while
/// meaningful gaps are 1e-3 or larger, so the cutoff is safe on both sides.
pub const GAP_EPSILON: f64 = 1e-9;

/// Multi-player gap enumeration walks all N!/(N−M)! injective assignments;
/// keep that exhaustive step cheap.
pub const MAX_ENUMERATION_ARMS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvError {
    MeanOutOfRange(f64),
    SupportOutOfRange {
        mean: f64,
        half_width: f64,
    },
    TooFewArms(usize),
    PlayerCount {
        players: usize,
        arms: usize,
    },
    RaggedMeanMatrix,
    EnumerationTooLarge {
        arms: usize,
    },
    /// Every alternative ties the optimum; no strictly positive gap exists.
    NoStrictGap,
    /// The optimum is not unique and strict gaps were requested.
    TiedOptimum,
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::MeanOutOfRange(m) => write!(f, "arm mean {m} outside [0, 1]"),
            EnvError::SupportOutOfRange { mean, half_width } => write!(
                f,
                "uniform arm support [{} - {hw}, {} + {hw}] leaves [0, 1]",
                mean,
                mean,
                hw = half_width
            ),
            EnvError::TooFewArms(n) => write!(f, "need at least 2 arms, got {n}"),
            EnvError::PlayerCount { players, arms } => {
                write!(
                    f,
                    "need 1 ≤ players ≤ arms, got {players} players / {arms} arms"
                )
            }
            EnvError::RaggedMeanMatrix => write!(f, "mean matrix rows have unequal lengths"),
            EnvError::EnumerationTooLarge { arms } => write!(
                f,
                "exhaustive matching enumeration limited to {MAX_ENUMERATION_ARMS} arms, got {arms}"
            ),
            EnvError::NoStrictGap => {
                write!(
                    f,
                    "all alternatives are optimal; no strictly positive gap exists"
                )
            }
            EnvError::TiedOptimum => {
                write!(f, "optimum is not unique but strict gaps were required")
            }
        }
    }
}

impl std::error::Error for EnvError {}

/// Reward distribution family. Anything with support inside `[0, 1]` works;
/// Bernoulli is the default because every reference experiment uses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardKind {
    Bernoulli,
    /// Uniform on `[mean − half_width, mean + half_width]`.
    Uniform {
        half_width: f64,
    },
}

/// One arm's reward distribution. The declared mean is the analytic mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmModel {
    kind: RewardKind,
    mean: f64,
}

impl ArmModel {
    pub fn bernoulli(mean: f64) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&mean) || !mean.is_finite() {
            return Err(EnvError::MeanOutOfRange(mean));
        }
        Ok(ArmModel {
            kind: RewardKind::Bernoulli,
            mean,
        })
    }

    pub fn uniform(mean: f64, half_width: f64) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&mean) || !mean.is_finite() {
            return Err(EnvError::MeanOutOfRange(mean));
        }
        if !(0.0..=0.5).contains(&half_width) || mean - half_width < 0.0 || mean + half_width > 1.0
        {
            return Err(EnvError::SupportOutOfRange { mean, half_width });
        }
        Ok(ArmModel {
            kind: RewardKind::Uniform { half_width },
            mean,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    /// One i.i.d. draw from the arm; always lands in `[0, 1]`.
    pub fn sample_reward(&self, stream: &mut RngStream) -> f64 {
        match self.kind {
            RewardKind::Bernoulli => {
                if stream.next_unit() < self.mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Uniform { half_width } => {
                let u = stream.next_unit();
                (self.mean + half_width * (2.0 * u - 1.0)).clamp(0.0, 1.0)
            }
        }
    }
}

/// Ground-truth problem instance: one player with `N` arms, or `M` players
/// with a full `M × N` mean matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum BanditInstance {
    Single(Vec<ArmModel>),
    Multi(Vec<Vec<ArmModel>>),
}

impl BanditInstance {
    pub fn single(arms: Vec<ArmModel>) -> Result<Self, EnvError> {
        if arms.len() < 2 {
            return Err(EnvError::TooFewArms(arms.len()));
        }
        Ok(BanditInstance::Single(arms))
    }

    pub fn multi(rows: Vec<Vec<ArmModel>>) -> Result<Self, EnvError> {
        let players = rows.len();
        let arms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != arms) {
            return Err(EnvError::RaggedMeanMatrix);
        }
        if arms < 2 {
            return Err(EnvError::TooFewArms(arms));
        }
        if players == 0 || players > arms {
            return Err(EnvError::PlayerCount { players, arms });
        }
        Ok(BanditInstance::Multi(rows))
    }

    /// Convenience constructor from raw Bernoulli means.
    pub fn single_bernoulli(means: &[f64]) -> Result<Self, EnvError> {
        Self::single(
            means
                .iter()
                .map(|&m| ArmModel::bernoulli(m))
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn multi_bernoulli(matrix: &[Vec<f64>]) -> Result<Self, EnvError> {
        Self::multi(
            matrix
                .iter()
                .map(|row| row.iter().map(|&m| ArmModel::bernoulli(m)).collect())
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn num_arms(&self) -> usize {
        match self {
            BanditInstance::Single(arms) => arms.len(),
            BanditInstance::Multi(rows) => rows[0].len(),
        }
    }

    pub fn num_players(&self) -> usize {
        match self {
            BanditInstance::Single(_) => 1,
            BanditInstance::Multi(rows) => rows.len(),
        }
    }

    pub fn arm(&self, player: usize, arm: usize) -> &ArmModel {
        match self {
            BanditInstance::Single(arms) => {
                assert_eq!(player, 0, "single-player instance has only player 0");
                &arms[arm]
            }
            BanditInstance::Multi(rows) => &rows[player][arm],
        }
    }

    /// Mean matrix, one row per player (a single row in single mode).
    pub fn mean_matrix(&self) -> Vec<Vec<f64>> {
        match self {
            BanditInstance::Single(arms) => vec![arms.iter().map(ArmModel::mean).collect()],
            BanditInstance::Multi(rows) => rows
                .iter()
                .map(|r| r.iter().map(ArmModel::mean).collect())
                .collect(),
        }
    }
}

/// Gap structure of an instance: who the optimum is and how far behind
/// everything else sits.
#[derive(Debug, Clone, PartialEq)]
pub enum GapSummary {
    Single {
        /// Index of the best arm (lowest index on ties).
        best_arm: usize,
        /// Per-arm gap to the best arm; exact zero for arms tying the best.
        gaps: Vec<f64>,
        delta_min: f64,
        delta_max: f64,
    },
    Multi {
        /// Surplus of the optimal player→arm assignment.
        optimal_surplus: f64,
        /// Every assignment achieving the optimal surplus, lexicographic order.
        optimal: Vec<Vec<usize>>,
        /// Gap of every injective assignment, in lexicographic order.
        assignment_gaps: Vec<(Vec<usize>, f64)>,
        delta_min: f64,
        delta_max: f64,
    },
}

impl GapSummary {
    /// Smallest strictly positive gap.
    pub fn delta_min(&self) -> f64 {
        match self {
            GapSummary::Single { delta_min, .. } | GapSummary::Multi { delta_min, .. } => {
                *delta_min
            }
        }
    }

    pub fn delta_max(&self) -> f64 {
        match self {
            GapSummary::Single { delta_max, .. } | GapSummary::Multi { delta_max, .. } => {
                *delta_max
            }
        }
    }
}

/// Gap summary with ties tolerated: `delta_min` is taken over the strictly
/// suboptimal alternatives only.
pub fn gap_summary(instance: &BanditInstance) -> Result<GapSummary, EnvError> {
    gap_summary_impl(instance, false)
}

/// Gap summary that rejects instances whose optimum is not unique.
pub fn gap_summary_strict(instance: &BanditInstance) -> Result<GapSummary, EnvError> {
    gap_summary_impl(instance, true)
}

fn snap(gap: f64) -> f64 {
    if gap.abs() <= GAP_EPSILON {
        0.0
    } else {
        gap
    }
}

fn gap_summary_impl(instance: &BanditInstance, strict: bool) -> Result<GapSummary, EnvError> {
    match instance {
        BanditInstance::Single(arms) => {
            let means: Vec<f64> = arms.iter().map(ArmModel::mean).collect();
            let best_arm = argmax_lowest(&means);
            let gaps: Vec<f64> = means.iter().map(|&m| snap(means[best_arm] - m)).collect();
            summarize(gaps.iter().copied(), strict).map(|(delta_min, delta_max)| {
                GapSummary::Single {
                    best_arm,
                    gaps,
                    delta_min,
                    delta_max,
                }
            })
        }
        BanditInstance::Multi(rows) => {
            let players = rows.len();
            let arms = rows[0].len();
            if arms > MAX_ENUMERATION_ARMS {
                return Err(EnvError::EnumerationTooLarge { arms });
            }
            let means: Vec<Vec<f64>> = instance.mean_matrix();
            let mut surpluses: Vec<(Vec<usize>, f64)> = Vec::new();
            for_each_assignment(players, arms, |assignment| {
                let surplus: f64 = assignment
                    .iter()
                    .enumerate()
                    .map(|(player, &arm)| means[player][arm])
                    .sum();
                surpluses.push((assignment.to_vec(), surplus));
            });
            let optimal_surplus = surpluses
                .iter()
                .map(|&(_, s)| s)
                .fold(f64::NEG_INFINITY, f64::max);
            let assignment_gaps: Vec<(Vec<usize>, f64)> = surpluses
                .into_iter()
                .map(|(a, s)| (a, snap(optimal_surplus - s)))
                .collect();
            let optimal: Vec<Vec<usize>> = assignment_gaps
                .iter()
                .filter(|(_, g)| *g == 0.0)
                .map(|(a, _)| a.clone())
                .collect();
            let (delta_min, delta_max) =
                summarize(assignment_gaps.iter().map(|&(_, g)| g), strict)?;
            Ok(GapSummary::Multi {
                optimal_surplus,
                optimal,
                assignment_gaps,
                delta_min,
                delta_max,
            })
        }
    }
}

fn summarize(gaps: impl Iterator<Item = f64>, strict: bool) -> Result<(f64, f64), EnvError> {
    let mut ties = 0usize;
    let mut delta_min = f64::INFINITY;
    let mut delta_max = 0.0f64;
    for gap in gaps {
        if gap == 0.0 {
            ties += 1;
        } else {
            delta_min = delta_min.min(gap);
            delta_max = delta_max.max(gap);
        }
    }
    if strict && ties > 1 {
        return Err(EnvError::TiedOptimum);
    }
    if !delta_min.is_finite() {
        return Err(EnvError::NoStrictGap);
    }
    Ok((delta_min, delta_max))
}

/// Apply collision semantics: any arm chosen by two or more players pays
/// zero to all of them, and a player taking no action earns zero.
///
/// Idempotent and equivariant under permuting the players.
pub fn resolve_collisions(actions: &[Option<usize>], drawn: &[f64]) -> Vec<f64> {
    assert_eq!(actions.len(), drawn.len(), "one raw draw per player");
    actions
        .iter()
        .enumerate()
        .map(|(player, action)| match action {
            None => 0.0,
            Some(arm) => {
                let contested = actions
                    .iter()
                    .enumerate()
                    .any(|(other, a)| other != player && *a == Some(*arm));
                if contested {
                    0.0
                } else {
                    drawn[player]
                }
            }
        })
        .collect()
}

/// What a substream is for. Keeping purposes separate means adding a policy
/// or a diagnostic never shifts another consumer's draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Environment reward draws.
    Reward = 0,
    /// Bernoulli reduction trials on observed rewards.
    Trial = 1,
    /// Posterior (Beta) draws inside sampling policies.
    Posterior = 2,
    /// Anything else (instance generation in tests, demos).
    Aux = 3,
}

/// Identifies one independent substream of the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub purpose: StreamPurpose,
    pub player: u32,
    pub replication: u32,
}

impl StreamKey {
    pub fn new(purpose: StreamPurpose, player: usize, replication: u32) -> Self {
        assert!(player < (1 << 22), "player index too large for stream key");
        StreamKey {
            purpose,
            player: player as u32,
            replication,
        }
    }

    /// Injective map into the ChaCha stream id, so distinct keys are
    /// guaranteed distinct (hence independent) streams.
    fn stream_id(self) -> u64 {
        ((self.purpose as u64) << 54) | ((self.player as u64) << 32) | self.replication as u64
    }
}

/// Counter-based deterministic RNG substream: identical `(seed, key)` pairs
/// replay identical draw sequences, distinct keys never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, key: StreamKey) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(key.stream_id());
        RngStream { rng }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        rand::Rng::random(&mut self.rng)
    }

    /// One Bernoulli trial with the given success probability.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&p));
        self.next_unit() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(seed: u64, purpose: StreamPurpose, player: usize, rep: u32) -> RngStream {
        RngStream::new(seed, StreamKey::new(purpose, player, rep))
    }

    #[test]
    fn degenerate_bernoulli_arms() {
        let mut s = stream(1, StreamPurpose::Reward, 0, 0);
        let one = ArmModel::bernoulli(1.0).unwrap();
        let zero = ArmModel::bernoulli(0.0).unwrap();
        for _ in 0..200 {
            assert_eq!(one.sample_reward(&mut s), 1.0);
            assert_eq!(zero.sample_reward(&mut s), 0.0);
        }
    }

    #[test]
    fn bernoulli_mean_law_of_large_numbers() {
        // 3 standard errors at n = 1e5, p = 0.9: 3·sqrt(0.09/1e5) ≈ 0.00285.
        let arm = ArmModel::bernoulli(0.9).unwrap();
        let mut s = stream(7, StreamPurpose::Reward, 0, 0);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| arm.sample_reward(&mut s)).sum();
        assert!((sum / n as f64 - 0.9).abs() <= 0.003);
    }

    #[test]
    fn uniform_arm_stays_in_unit_interval_and_matches_mean() {
        let arm = ArmModel::uniform(0.6, 0.3).unwrap();
        let mut s = stream(11, StreamPurpose::Reward, 0, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = arm.sample_reward(&mut s);
            assert!((0.0..=1.0).contains(&r));
            sum += r;
        }
        // se = half_width/sqrt(3n) ≈ 0.00055
        assert!((sum / n as f64 - 0.6).abs() <= 0.002);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ArmModel::bernoulli(-0.1).is_err());
        assert!(ArmModel::bernoulli(1.5).is_err());
        assert!(ArmModel::uniform(0.9, 0.2).is_err());
        assert!(ArmModel::uniform(0.1, 0.2).is_err());
    }

    #[test]
    fn collision_zeroes_contested_arms() {
        let actions = vec![Some(0), Some(0), Some(1)];
        let drawn = vec![0.7, 0.9, 0.5];
        assert_eq!(resolve_collisions(&actions, &drawn), vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn no_collision_passes_draws_through() {
        let actions = vec![Some(2), Some(0), Some(1)];
        let drawn = vec![0.7, 0.9, 0.5];
        assert_eq!(resolve_collisions(&actions, &drawn), drawn);
        // Single player cannot collide.
        assert_eq!(resolve_collisions(&[Some(3)], &[0.4]), vec![0.4]);
        // No-action players earn zero.
        assert_eq!(
            resolve_collisions(&[None, Some(1)], &[0.4, 0.6]),
            vec![0.0, 0.6]
        );
    }

    #[test]
    fn single_gap_summary_reference_instance() {
        let instance = BanditInstance::single_bernoulli(&[0.1, 0.5, 0.6, 0.9]).unwrap();
        match gap_summary(&instance).unwrap() {
            GapSummary::Single {
                best_arm,
                gaps,
                delta_min,
                delta_max,
            } => {
                assert_eq!(best_arm, 3);
                let expect = [0.8, 0.4, 0.3, 0.0];
                for (g, e) in gaps.iter().zip(expect) {
                    assert!((g - e).abs() < 1e-12);
                }
                assert!((delta_min - 0.3).abs() < 1e-12);
                assert!((delta_max - 0.8).abs() < 1e-12);
            }
            other => panic!("expected single summary, got {other:?}"),
        }
    }

    #[test]
    fn multi_gap_summary_reference_matrix() {
        let matrix = vec![
            vec![0.2, 0.25, 0.3],
            vec![0.4, 0.6, 0.5],
            vec![0.7, 0.9, 0.8],
        ];
        let instance = BanditInstance::multi_bernoulli(&matrix).unwrap();
        match gap_summary(&instance).unwrap() {
            GapSummary::Multi {
                optimal_surplus,
                optimal,
                assignment_gaps,
                delta_min,
                delta_max,
            } => {
                assert!((optimal_surplus - 1.6).abs() < 1e-9);
                assert_eq!(optimal.len(), 4);
                assert_eq!(assignment_gaps.len(), 6);
                assert!((delta_min - 0.15).abs() < 1e-9);
                assert!((delta_max - 0.15).abs() < 1e-9);
            }
            other => panic!("expected multi summary, got {other:?}"),
        }
    }

    #[test]
    fn strict_gap_summary_rejects_tied_optimum() {
        let matrix = vec![
            vec![0.2, 0.25, 0.3],
            vec![0.4, 0.6, 0.5],
            vec![0.7, 0.9, 0.8],
        ];
        let instance = BanditInstance::multi_bernoulli(&matrix).unwrap();
        assert_eq!(
            gap_summary_strict(&instance).unwrap_err(),
            EnvError::TiedOptimum
        );

        let unique = BanditInstance::single_bernoulli(&[0.1, 0.9]).unwrap();
        assert!(gap_summary_strict(&unique).is_ok());
    }

    #[test]
    fn all_equal_means_have_no_strict_gap() {
        let instance = BanditInstance::single_bernoulli(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(gap_summary(&instance).unwrap_err(), EnvError::NoStrictGap);
    }

    #[test]
    fn instance_validation() {
        assert!(BanditInstance::single_bernoulli(&[0.5]).is_err());
        assert!(BanditInstance::multi_bernoulli(
            &[vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6],]
        )
        .is_err()); // 3 players, 2 arms
        assert!(BanditInstance::multi_bernoulli(&[vec![0.1, 0.2], vec![0.3]]).is_err());
    }

    #[test]
    fn same_key_replays_identical_sequence() {
        let key = StreamKey::new(StreamPurpose::Reward, 3, 9);
        let mut a = RngStream::new(42, key);
        let mut b = RngStream::new(42, key);
        for _ in 0..100 {
            assert_eq!(a.next_unit(), b.next_unit());
        }
    }

    #[test]
    fn distinct_keys_diverge() {
        let mut a = stream(42, StreamPurpose::Reward, 0, 0);
        let mut b = stream(42, StreamPurpose::Reward, 0, 1);
        let mut c = stream(42, StreamPurpose::Trial, 0, 0);
        let same_ab = (0..32).filter(|_| a.next_unit() == b.next_unit()).count();
        assert!(same_ab < 4);
        let mut a = stream(42, StreamPurpose::Reward, 0, 0);
        let same_ac = (0..32).filter(|_| a.next_unit() == c.next_unit()).count();
        assert!(same_ac < 4);
    }

    proptest! {
        #[test]
        fn rewards_always_in_unit_interval(mean in 0.0f64..=1.0, seed in any::<u64>()) {
            let arm = ArmModel::bernoulli(mean).unwrap();
            let mut s = stream(seed, StreamPurpose::Reward, 0, 0);
            for _ in 0..64 {
                let r = arm.sample_reward(&mut s);
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn resolve_collisions_idempotent_and_permutation_equivariant(
            raw in proptest::collection::vec((proptest::option::of(0usize..4), 0.0f64..=1.0), 1..6),
            swap in (0usize..6, 0usize..6),
        ) {
            let actions: Vec<Option<usize>> = raw.iter().map(|(a, _)| *a).collect();
            let drawn: Vec<f64> = raw.iter().map(|(_, d)| *d).collect();
            let realized = resolve_collisions(&actions, &drawn);
            // Idempotent: collided rewards are zero and stay zero.
            prop_assert_eq!(resolve_collisions(&actions, &realized), realized.clone());

            // Equivariant: swapping two players swaps their outcomes.
            let (i, j) = (swap.0 % actions.len(), swap.1 % actions.len());
            let mut actions_p = actions.clone();
            let mut drawn_p = drawn.clone();
            actions_p.swap(i, j);
            drawn_p.swap(i, j);
            let mut realized_p = resolve_collisions(&actions_p, &drawn_p);
            realized_p.swap(i, j);
            prop_assert_eq!(realized_p, realized);
        }

        #[test]
        fn multi_gap_summary_reduces_to_single_for_one_player(
            means in proptest::collection::vec(0.0f64..=1.0, 2..6),
        ) {
            let single = BanditInstance::single_bernoulli(&means).unwrap();
            let multi = BanditInstance::multi_bernoulli(std::slice::from_ref(&means)).unwrap();
            match (gap_summary(&single), gap_summary(&multi)) {
                (Ok(GapSummary::Single { best_arm, delta_min, delta_max, .. }),
                 Ok(GapSummary::Multi { optimal_surplus, optimal, delta_min: dmin, delta_max: dmax, .. })) => {
                    prop_assert!((optimal_surplus - means[best_arm]).abs() < 1e-12);
                    prop_assert!(optimal.contains(&vec![best_arm]));
                    prop_assert!((delta_min - dmin).abs() < 1e-12);
                    prop_assert!((delta_max - dmax).abs() < 1e-12);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                other => prop_assert!(false, "mismatched outcomes: {:?}", other),
            }
        }
    }
}
