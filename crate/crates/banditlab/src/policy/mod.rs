//! Bandit policies: single-player phased policies with baselines, and their
//! decentralized multiplayer counterparts.

pub mod multi;
pub mod single;

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyError {
    InvalidGamma(u32),
    InvalidDelta(f64),
    InvalidDeltaLb(f64),
    /// The matching precision must satisfy 0 < ε < Δ/(M+1).
    EpsilonTooLarge {
        epsilon: f64,
        delta_lb: f64,
        players: usize,
    },
    InvalidEpsilon(f64),
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::InvalidGamma(g) => write!(f, "gamma must be ≥ 1, got {g}"),
            PolicyError::InvalidDelta(d) => write!(f, "delta must lie in (0, 1), got {d}"),
            PolicyError::InvalidDeltaLb(d) => {
                write!(f, "gap lower bound must lie in (0, 1], got {d}")
            }
            PolicyError::EpsilonTooLarge {
                epsilon,
                delta_lb,
                players,
            } => write!(
                f,
                "requires 0 < epsilon < delta_lb/(M+1): epsilon = {epsilon}, \
                 delta_lb = {delta_lb}, M = {players}"
            ),
            PolicyError::InvalidEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
        }
    }
}

impl std::error::Error for PolicyError {}
