//! Experiment configuration: a TOML surface validated into typed form
//! before any simulation starts.
//!
//! ```toml
//! [instance]
//! mode = "single"
//! means = [0.1, 0.5, 0.6, 0.9]
//!
//! [policy]
//! kind = "e3"
//! gamma = 200
//!
//! [cost]
//! kind = "constant"
//! value = 0.0
//!
//! [run]
//! horizon_slots = 2000000
//! replications = 10
//! seed = 7
//! ```

use serde::{Deserialize, Serialize};

use crate::env::BanditInstance;
use crate::harness::HarnessError;
use crate::policy::multi::{CostModel, EpsilonSchedule, ExplorationAccounting};
use crate::policy::single::GammaSchedule;
use crate::LogBase;

/// The raw TOML shape. Parsing materializes all defaults, so serializing a
/// parsed config reproduces an equivalent config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub instance: RawInstance,
    pub policy: RawPolicy,
    #[serde(default)]
    pub cost: RawCost,
    pub run: RawRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    /// "single" or "multi".
    pub mode: String,
    /// Bernoulli means, single mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    /// Player-by-arm Bernoulli means, multi mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPolicy {
    /// One of: e3, e3ts, ucb1, ts, de3, de3ts.
    pub kind: String,
    /// "fixed" (explicit gamma), "known" (from delta_lb), or "unknown"
    /// (diverging log^δ schedule). Defaults to "fixed" when gamma is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_lb: Option<f64>,
    /// δ for the unknown-gap gamma schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_delta: Option<f64>,
    /// "fixed" or "decay" (multiplayer policies only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// δ for the decaying epsilon schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCost {
    /// "constant" or "inverse-epsilon".
    pub kind: String,
    #[serde(default)]
    pub value: f64,
}

impl Default for RawCost {
    fn default() -> Self {
        RawCost {
            kind: "constant".to_string(),
            value: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_slots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_epochs: Option<u32>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub seed: u64,
    /// "2" or "e".
    #[serde(default = "default_log_base")]
    pub log_base: String,
    /// "sequential" (M·N·γ booked wall-clock slots per exploration phase,
    /// players exploring in turns) or "actual" (the N·γ slots the staggered
    /// schedule consumes). Multiplayer only; ignored for single-player
    /// policies.
    #[serde(default = "default_accounting")]
    pub exploration_accounting: String,
}

fn default_replications() -> u32 {
    1
}

fn default_log_base() -> String {
    "2".to_string()
}

fn default_accounting() -> String {
    "sequential".to_string()
}

/// Which policy an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    E3,
    E3Ts,
    Ucb1,
    Ts,
    De3,
    De3Ts,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::E3 => "e3",
            PolicyKind::E3Ts => "e3ts",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::Ts => "ts",
            PolicyKind::De3 => "de3",
            PolicyKind::De3Ts => "de3ts",
        }
    }

    pub fn is_multi(self) -> bool {
        matches!(self, PolicyKind::De3 | PolicyKind::De3Ts)
    }

    pub fn is_phased(self) -> bool {
        !matches!(self, PolicyKind::Ucb1 | PolicyKind::Ts)
    }
}

/// Fully validated policy description.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    E3 {
        gamma: GammaSchedule,
    },
    E3Ts {
        gamma: GammaSchedule,
    },
    Ucb1,
    Ts,
    De3 {
        gamma: GammaSchedule,
        epsilon: EpsilonSchedule,
    },
    De3Ts {
        gamma: GammaSchedule,
        epsilon: EpsilonSchedule,
    },
}

impl PolicySpec {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::E3 { .. } => PolicyKind::E3,
            PolicySpec::E3Ts { .. } => PolicyKind::E3Ts,
            PolicySpec::Ucb1 => PolicyKind::Ucb1,
            PolicySpec::Ts => PolicyKind::Ts,
            PolicySpec::De3 { .. } => PolicyKind::De3,
            PolicySpec::De3Ts { .. } => PolicyKind::De3Ts,
        }
    }

    pub fn gamma_schedule(&self) -> Option<GammaSchedule> {
        match self {
            PolicySpec::E3 { gamma }
            | PolicySpec::E3Ts { gamma }
            | PolicySpec::De3 { gamma, .. }
            | PolicySpec::De3Ts { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }

    pub fn epsilon_schedule(&self) -> Option<EpsilonSchedule> {
        match self {
            PolicySpec::De3 { epsilon, .. } | PolicySpec::De3Ts { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Slots(u64),
    Epochs(u32),
}

/// A validated, runnable experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub policy: PolicySpec,
    pub cost: CostModel,
    pub horizon: Horizon,
    pub replications: u32,
    pub seed: u64,
    pub log_base: LogBase,
    pub accounting: ExplorationAccounting,
    /// Capture a full per-slot history for oracle recomputation. Test-only
    /// knob; not part of the file format.
    pub capture_history: bool,
}

fn err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl RawConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| err(format!("invalid config: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, HarnessError> {
        let instance = parse_instance(&raw.instance)?;
        let policy = parse_policy(&raw.policy, &instance)?;
        let cost = parse_cost(&raw.cost, &policy)?;
        let horizon = parse_horizon(&raw.run, &policy)?;
        if raw.run.replications == 0 {
            return Err(err("replications must be ≥ 1"));
        }
        let log_base = LogBase::parse(&raw.run.log_base).ok_or_else(|| {
            err(format!(
                "log_base must be \"2\" or \"e\", got {:?}",
                raw.run.log_base
            ))
        })?;
        let accounting = match raw.run.exploration_accounting.as_str() {
            "sequential" => ExplorationAccounting::Sequential,
            "actual" => ExplorationAccounting::Actual,
            other => {
                return Err(err(format!(
                    "exploration_accounting must be \"sequential\" or \"actual\", got {other:?}"
                )))
            }
        };
        Ok(ExperimentConfig {
            instance,
            policy,
            cost,
            horizon,
            replications: raw.run.replications,
            seed: raw.run.seed,
            log_base,
            accounting,
            capture_history: false,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Self::from_raw(&RawConfig::from_toml_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

fn parse_instance(raw: &RawInstance) -> Result<BanditInstance, HarnessError> {
    match raw.mode.as_str() {
        "single" => {
            let means = raw
                .means
                .as_ref()
                .ok_or_else(|| err("single mode needs instance.means"))?;
            if raw.matrix.is_some() {
                return Err(err("single mode takes means, not matrix"));
            }
            Ok(BanditInstance::single_bernoulli(means)?)
        }
        "multi" => {
            let matrix = raw
                .matrix
                .as_ref()
                .ok_or_else(|| err("multi mode needs instance.matrix"))?;
            if raw.means.is_some() {
                return Err(err("multi mode takes matrix, not means"));
            }
            Ok(BanditInstance::multi_bernoulli(matrix)?)
        }
        other => Err(err(format!(
            "instance.mode must be \"single\" or \"multi\", got {other:?}"
        ))),
    }
}

fn parse_policy(raw: &RawPolicy, instance: &BanditInstance) -> Result<PolicySpec, HarnessError> {
    let kind = match raw.kind.as_str() {
        "e3" => PolicyKind::E3,
        "e3ts" => PolicyKind::E3Ts,
        "ucb1" => PolicyKind::Ucb1,
        "ts" => PolicyKind::Ts,
        "de3" => PolicyKind::De3,
        "de3ts" => PolicyKind::De3Ts,
        other => return Err(err(format!("unknown policy kind {other:?}"))),
    };
    let is_multi_instance = matches!(instance, BanditInstance::Multi(_));
    if kind.is_multi() != is_multi_instance {
        return Err(err(format!(
            "policy {} needs a {} instance",
            kind.name(),
            if kind.is_multi() { "multi" } else { "single" }
        )));
    }
    if !kind.is_phased() {
        for (field, set) in [
            ("gamma", raw.gamma.is_some()),
            ("gamma_mode", raw.gamma_mode.is_some()),
            ("epsilon", raw.epsilon.is_some()),
        ] {
            if set {
                return Err(err(format!("policy {} takes no {field}", kind.name())));
            }
        }
        return Ok(match kind {
            PolicyKind::Ucb1 => PolicySpec::Ucb1,
            _ => PolicySpec::Ts,
        });
    }

    let epsilon = if kind.is_multi() {
        Some(parse_epsilon(raw)?)
    } else {
        None
    };
    let gamma = parse_gamma(raw, kind, instance, epsilon.as_ref())?;
    Ok(match kind {
        PolicyKind::E3 => PolicySpec::E3 { gamma },
        PolicyKind::E3Ts => PolicySpec::E3Ts { gamma },
        PolicyKind::De3 => PolicySpec::De3 {
            gamma,
            epsilon: epsilon.unwrap(),
        },
        PolicyKind::De3Ts => PolicySpec::De3Ts {
            gamma,
            epsilon: epsilon.unwrap(),
        },
        _ => unreachable!(),
    })
}

fn parse_epsilon(raw: &RawPolicy) -> Result<EpsilonSchedule, HarnessError> {
    let mode = raw.epsilon_mode.as_deref().unwrap_or("fixed");
    match mode {
        "fixed" => {
            let eps = raw
                .epsilon
                .ok_or_else(|| err("epsilon_mode \"fixed\" needs policy.epsilon"))?;
            Ok(EpsilonSchedule::fixed(eps)?)
        }
        "decay" => {
            let delta = raw
                .epsilon_delta
                .ok_or_else(|| err("epsilon_mode \"decay\" needs policy.epsilon_delta"))?;
            if raw.epsilon.is_some() {
                return Err(err(
                    "epsilon_mode \"decay\" takes epsilon_delta, not epsilon",
                ));
            }
            Ok(EpsilonSchedule::decaying(delta)?)
        }
        other => Err(err(format!(
            "epsilon_mode must be \"fixed\" or \"decay\", got {other:?}"
        ))),
    }
}

fn parse_gamma(
    raw: &RawPolicy,
    kind: PolicyKind,
    instance: &BanditInstance,
    epsilon: Option<&EpsilonSchedule>,
) -> Result<GammaSchedule, HarnessError> {
    use crate::policy::multi::{gamma_beta_multi, gamma_multi};
    use crate::policy::single::{gamma_beta_known, gamma_known};

    let mode = raw.gamma_mode.as_deref().unwrap_or("fixed");
    match mode {
        "fixed" => {
            let gamma = raw
                .gamma
                .ok_or_else(|| err("gamma_mode \"fixed\" needs policy.gamma"))?;
            Ok(GammaSchedule::known(gamma)?)
        }
        "known" => {
            let delta_lb = raw
                .delta_lb
                .ok_or_else(|| err("gamma_mode \"known\" needs policy.delta_lb"))?;
            if raw.gamma.is_some() {
                return Err(err("gamma_mode \"known\" derives gamma; drop policy.gamma"));
            }
            let gamma = match kind {
                PolicyKind::E3 => gamma_known(delta_lb)?,
                PolicyKind::E3Ts => gamma_beta_known(delta_lb)?,
                PolicyKind::De3 | PolicyKind::De3Ts => {
                    let eps = match epsilon {
                        Some(EpsilonSchedule::Fixed { epsilon }) => *epsilon,
                        _ => return Err(err(
                            "gamma_mode \"known\" on a multiplayer policy needs a fixed epsilon",
                        )),
                    };
                    let players = instance.num_players();
                    match kind {
                        PolicyKind::De3 => gamma_multi(players, delta_lb, eps)?,
                        _ => gamma_beta_multi(players, delta_lb, eps)?,
                    }
                }
                _ => unreachable!(),
            };
            Ok(GammaSchedule::known(gamma)?)
        }
        "unknown" => {
            let delta = raw
                .gamma_delta
                .ok_or_else(|| err("gamma_mode \"unknown\" needs policy.gamma_delta"))?;
            Ok(GammaSchedule::unknown(delta)?)
        }
        other => Err(err(format!(
            "gamma_mode must be \"fixed\", \"known\", or \"unknown\", got {other:?}"
        ))),
    }
}

fn parse_cost(raw: &RawCost, policy: &PolicySpec) -> Result<CostModel, HarnessError> {
    match raw.kind.as_str() {
        "constant" => {
            if raw.value < 0.0 {
                return Err(err("cost.value must be ≥ 0"));
            }
            Ok(CostModel::Constant { cost: raw.value })
        }
        "inverse-epsilon" => {
            if !policy.kind().is_multi() {
                return Err(err("inverse-epsilon cost needs a multiplayer policy"));
            }
            Ok(CostModel::InverseEpsilon)
        }
        other => Err(err(format!(
            "cost.kind must be \"constant\" or \"inverse-epsilon\", got {other:?}"
        ))),
    }
}

fn parse_horizon(raw: &RawRun, policy: &PolicySpec) -> Result<Horizon, HarnessError> {
    match (raw.horizon_slots, raw.horizon_epochs) {
        (Some(slots), None) => {
            if slots == 0 {
                return Err(err("horizon_slots must be ≥ 1"));
            }
            Ok(Horizon::Slots(slots))
        }
        (None, Some(epochs)) => {
            if epochs == 0 {
                return Err(err("horizon_epochs must be ≥ 1"));
            }
            if !policy.kind().is_phased() {
                return Err(err(
                    "epoch horizons need a phased policy; use horizon_slots",
                ));
            }
            if epochs > 40 {
                return Err(err(
                    "horizon_epochs > 40 would overflow the 2^l phase lengths",
                ));
            }
            Ok(Horizon::Epochs(epochs))
        }
        (Some(_), Some(_)) => Err(err("set horizon_slots or horizon_epochs, not both")),
        (None, None) => Err(err("set horizon_slots or horizon_epochs")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
[instance]
mode = "single"
means = [0.1, 0.5, 0.6, 0.9]

[policy]
kind = "e3"
gamma = 200

[run]
horizon_slots = 1000
replications = 2
seed = 7
"#;

    const MULTI: &str = r#"
[instance]
mode = "multi"
matrix = [[0.2, 0.25, 0.3], [0.4, 0.6, 0.5], [0.7, 0.9, 0.8]]

[policy]
kind = "de3ts"
gamma = 400
epsilon = 0.001

[cost]
kind = "constant"
value = 1.0

[run]
horizon_epochs = 20
replications = 10
seed = 7
exploration_accounting = "sequential"
"#;

    #[test]
    fn parses_single_config() {
        let cfg = ExperimentConfig::from_toml_str(SINGLE).unwrap();
        assert_eq!(cfg.policy.kind(), PolicyKind::E3);
        assert_eq!(cfg.horizon, Horizon::Slots(1000));
        assert_eq!(cfg.replications, 2);
        assert_eq!(cfg.log_base, LogBase::Two);
        assert_eq!(cfg.instance.num_arms(), 4);
    }

    #[test]
    fn parses_multi_config() {
        let cfg = ExperimentConfig::from_toml_str(MULTI).unwrap();
        assert_eq!(cfg.policy.kind(), PolicyKind::De3Ts);
        assert_eq!(cfg.horizon, Horizon::Epochs(20));
        assert_eq!(cfg.accounting, ExplorationAccounting::Sequential);
        assert_eq!(cfg.cost, CostModel::Constant { cost: 1.0 });
        assert_eq!(
            cfg.policy.epsilon_schedule(),
            Some(EpsilonSchedule::Fixed { epsilon: 0.001 })
        );
    }

    #[test]
    fn round_trip_preserves_config() {
        for text in [SINGLE, MULTI] {
            let raw = RawConfig::from_toml_str(text).unwrap();
            let serialized = raw.to_toml_string();
            let reparsed = RawConfig::from_toml_str(&serialized).unwrap();
            assert_eq!(raw, reparsed);
            // And the validated forms agree too.
            assert_eq!(
                ExperimentConfig::from_raw(&raw).unwrap(),
                ExperimentConfig::from_raw(&reparsed).unwrap()
            );
        }
    }

    #[test]
    fn known_gamma_mode_derives_gamma() {
        let text = SINGLE.replace("gamma = 200", "gamma_mode = \"known\"\ndelta_lb = 0.1");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            cfg.policy.gamma_schedule(),
            Some(GammaSchedule::Known { gamma: 200 })
        );

        let ts = text.replace("kind = \"e3\"", "kind = \"e3ts\"");
        let cfg = ExperimentConfig::from_toml_str(&ts).unwrap();
        assert_eq!(
            cfg.policy.gamma_schedule(),
            Some(GammaSchedule::Known { gamma: 800 })
        );
    }

    #[test]
    fn preconditions_checked_at_load_time() {
        // Policy/instance mode mismatch.
        let bad = SINGLE.replace("kind = \"e3\"", "kind = \"de3\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        // Unknown keys rejected.
        let bad = SINGLE.replace("seed = 7", "seed = 7\ntypo_field = 3");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        // Known-mode multi epsilon violating the threshold.
        let bad = MULTI.replace(
            "gamma = 400\nepsilon = 0.001",
            "gamma_mode = \"known\"\ndelta_lb = 0.15\nepsilon = 0.05",
        );
        let e = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(e.to_string().contains("epsilon"), "{e}");
        // Zero replications.
        let bad = SINGLE.replace("replications = 2", "replications = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        // Baselines reject epoch horizons.
        let bad = SINGLE
            .replace("kind = \"e3\"\ngamma = 200", "kind = \"ucb1\"")
            .replace("horizon_slots = 1000", "horizon_epochs = 5");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn decaying_epsilon_with_unknown_gamma() {
        let text = MULTI.replace(
            "gamma = 400\nepsilon = 0.001",
            "gamma_mode = \"unknown\"\ngamma_delta = 0.5\nepsilon_mode = \"decay\"\nepsilon_delta = 0.5",
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            cfg.policy.gamma_schedule(),
            Some(GammaSchedule::Unknown { delta: 0.5 })
        );
        assert_eq!(
            cfg.policy.epsilon_schedule(),
            Some(EpsilonSchedule::Decaying { delta: 0.5 })
        );
    }
}
