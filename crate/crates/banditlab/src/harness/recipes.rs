//! Built-in reproduction recipes for the two reference experiments.
//!
//! The first: four Bernoulli arms with means 0.1/0.5/0.6/0.9 over two
//! million slots, comparing the phased policies (γ = 200, γ_β = 800 from
//! the known 0.1 gap bound) against UCB1, ten runs, no computation cost.
//!
//! The second: the 3×3 player-arm matrix over 20 epochs with matching
//! precision ε = 0.001, γ = 100 for the sample-mean policy and 400 for the
//! posterior-sampling one, unit cost per matching invocation, ten runs.

use std::path::{Path, PathBuf};

use crate::harness::config::ExperimentConfig;
use crate::harness::csv::emit_csv;
use crate::harness::runner::{run_experiment, ExperimentOutput};
use crate::harness::HarnessError;

pub const FIG1_MEANS: [f64; 4] = [0.1, 0.5, 0.6, 0.9];
pub const FIG1_HORIZON: u64 = 2_000_000;
pub const FIG2_MATRIX: [[f64; 3]; 3] = [[0.2, 0.25, 0.3], [0.4, 0.6, 0.5], [0.7, 0.9, 0.8]];
pub const FIG2_EPOCHS: u32 = 20;
pub const FIG2_EPSILON: f64 = 0.001;

fn single_recipe(kind: &str, gamma: u32, seed: u64, runs: u32) -> ExperimentConfig {
    let policy = match kind {
        "ucb1" | "ts" => format!("kind = \"{kind}\""),
        _ => format!("kind = \"{kind}\"\ngamma = {gamma}"),
    };
    let text = format!(
        r#"
[instance]
mode = "single"
means = [0.1, 0.5, 0.6, 0.9]

[policy]
{policy}

[cost]
kind = "constant"
value = 0.0

[run]
horizon_slots = {FIG1_HORIZON}
replications = {runs}
seed = {seed}
log_base = "2"
"#
    );
    ExperimentConfig::from_toml_str(&text).expect("recipe config is valid")
}

fn multi_recipe(kind: &str, gamma: u32, seed: u64, runs: u32) -> ExperimentConfig {
    let text = format!(
        r#"
[instance]
mode = "multi"
matrix = [[0.2, 0.25, 0.3], [0.4, 0.6, 0.5], [0.7, 0.9, 0.8]]

[policy]
kind = "{kind}"
gamma = {gamma}
epsilon = {FIG2_EPSILON}

[cost]
kind = "constant"
value = 1.0

[run]
horizon_epochs = {FIG2_EPOCHS}
replications = {runs}
seed = {seed}
log_base = "2"
exploration_accounting = "sequential"
"#
    );
    ExperimentConfig::from_toml_str(&text).expect("recipe config is valid")
}

/// The single-player comparison: phased policies vs UCB1.
pub fn fig1_configs(seed: u64, runs: u32) -> Vec<(&'static str, ExperimentConfig)> {
    vec![
        ("e3", single_recipe("e3", 200, seed, runs)),
        ("e3ts", single_recipe("e3ts", 800, seed, runs)),
        ("ucb1", single_recipe("ucb1", 0, seed, runs)),
    ]
}

/// The multiplayer comparison: both decentralized phased policies.
pub fn fig2_configs(seed: u64, runs: u32) -> Vec<(&'static str, ExperimentConfig)> {
    vec![
        ("de3", multi_recipe("de3", 100, seed, runs)),
        ("de3ts", multi_recipe("de3ts", 400, seed, runs)),
    ]
}

/// One emitted trajectory file.
#[derive(Debug)]
pub struct RecipeOutput {
    pub name: &'static str,
    pub path: PathBuf,
    pub output: ExperimentOutput,
}

/// Run a set of named configs and write each mean trajectory next to
/// `out`: `fig1.csv` becomes `fig1_e3.csv`, `fig1_ucb1.csv`, ...
pub fn run_recipe(
    configs: Vec<(&'static str, ExperimentConfig)>,
    out: &Path,
) -> Result<Vec<RecipeOutput>, HarnessError> {
    let mut results = Vec::new();
    for (name, config) in configs {
        let output = run_experiment(&config)?;
        let path = suffixed_path(out, name);
        emit_csv(&output.mean, &path)?;
        results.push(RecipeOutput { name, path, output });
    }
    Ok(results)
}

fn suffixed_path(out: &Path, name: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_{name}.{ext}"))
}
