//! Command-line front end: run experiments from config files, query bound
//! curves, demo the auction, and reproduce the reference experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banditlab::harness::config::{ExperimentConfig, Horizon};
use banditlab::harness::csv::{emit_csv, format_sig12, write_csv};
use banditlab::harness::recipes;
use banditlab::harness::runner::{run_experiment, total_slots};
use banditlab::matching::{auction_run, brute_force, ValueMatrix};
use banditlab::LogBase;

/// Deterministic simulation lab for single-player and decentralized
/// multiplayer multi-armed bandits.
#[derive(Parser)]
#[command(name = "banditlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the horizon (slots for slot horizons, epochs otherwise).
    #[arg(long)]
    horizon: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    runs: Option<u32>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the log base ("2" or "e").
    #[arg(long, value_parser = parse_log_base)]
    log_base: Option<LogBase>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single-player experiment from a config file.
    Single(RunFlags),
    /// Run a multiplayer experiment from a config file.
    Multi(RunFlags),
    /// Emit the theoretical bound curve for a configured policy.
    Bounds(RunFlags),
    /// Run the auction on a value matrix and print its accounting.
    AuctionDemo {
        /// Config with a multi instance matrix and policy epsilon; the
        /// built-in 3×3 reference matrix at ε = 0.001 when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Reproduce a reference experiment.
    Repro {
        /// "fig1" (single-player comparison) or "fig2" (multiplayer).
        which: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        /// Output stem; each policy gets `<stem>_<policy>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    LogBase::parse(s).ok_or_else(|| format!("log base must be \"2\" or \"e\", got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("banditlab: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Single(flags) => run_configured(flags, false),
        Command::Multi(flags) => run_configured(flags, true),
        Command::Bounds(flags) => run_bounds(flags),
        Command::AuctionDemo { config } => run_auction_demo(config.as_deref()),
        Command::Repro {
            which,
            seed,
            runs,
            out,
        } => run_repro(&which, seed, runs, out),
    }
}

fn load_config(flags: &RunFlags) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(&flags.config)?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(horizon) = flags.horizon {
        cfg.horizon = match cfg.horizon {
            Horizon::Slots(_) => Horizon::Slots(horizon),
            Horizon::Epochs(_) => Horizon::Epochs(
                u32::try_from(horizon)
                    .map_err(|_| format!("epoch horizon override {horizon} out of range"))?,
            ),
        };
    }
    if let Some(runs) = flags.runs {
        cfg.replications = runs;
    }
    if let Some(base) = flags.log_base {
        cfg.log_base = base;
    }
    Ok(cfg)
}

/// Respect the output-directory override for relative paths.
fn resolve_out(path: PathBuf) -> PathBuf {
    match std::env::var_os("BANDITLAB_OUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path,
    }
}

fn run_configured(flags: RunFlags, want_multi: bool) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = load_config(&flags)?;
    if cfg.policy.kind().is_multi() != want_multi {
        return Err(format!(
            "policy {} belongs to the {} subcommand",
            cfg.policy.kind().name(),
            if cfg.policy.kind().is_multi() {
                "multi"
            } else {
                "single"
            }
        )
        .into());
    }
    let output = run_experiment(&cfg)?;
    match flags.out {
        Some(path) => {
            let path = resolve_out(path);
            emit_csv(&output.mean, &path)?;
            eprintln!(
                "{}: {} runs, final mean regret {}, wrote {}",
                cfg.policy.kind().name(),
                cfg.replications,
                format_sig12(output.final_mean_total()),
                path.display()
            );
        }
        None => write_csv(&output.mean, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run_bounds(flags: RunFlags) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = load_config(&flags)?;
    let bound = banditlab::harness::runner::bound_fn(&cfg)?.ok_or_else(|| {
        format!(
            "no closed-form bound curve for policy {} with this schedule",
            cfg.policy.kind().name()
        )
    })?;
    let horizon = total_slots(&cfg)?;
    if horizon < 2 {
        return Err("bound curves need a horizon of at least 2 slots".into());
    }
    let mut points = Vec::new();
    let mut t = 2u64;
    while t < horizon {
        points.push(t);
        t = (((t as f64) * 1.2).ceil() as u64).max(t + 1);
    }
    points.push(horizon);
    let mut rows = String::new();
    rows.push_str("t,bound_value\n");
    for t in points {
        rows.push_str(&format!("{t},{}\n", format_sig12(bound(t))));
    }
    match flags.out {
        Some(path) => {
            let path = resolve_out(path);
            std::fs::write(&path, rows)
                .map_err(|source| banditlab::harness::HarnessError::Io { path, source })?;
        }
        None => print!("{rows}"),
    }
    Ok(())
}

fn run_auction_demo(config: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
    let (matrix, epsilon) = match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let rows = cfg.instance.mean_matrix();
            let epsilon = match cfg.policy.epsilon_schedule() {
                Some(banditlab::policy::multi::EpsilonSchedule::Fixed { epsilon }) => epsilon,
                _ => recipes::FIG2_EPSILON,
            };
            (ValueMatrix::new(rows)?, epsilon)
        }
        None => {
            let rows = recipes::FIG2_MATRIX.iter().map(|r| r.to_vec()).collect();
            (ValueMatrix::new(rows)?, recipes::FIG2_EPSILON)
        }
    };
    let (matching, trace) = auction_run(&matrix, epsilon)?;
    let (_, optimal) = brute_force(&matrix)?;
    println!(
        "players: {}, arms: {}, epsilon: {}",
        matrix.players(),
        matrix.arms(),
        epsilon
    );
    for (player, arm) in matching.assignments().iter().enumerate() {
        println!(
            "player {} -> arm {}",
            player + 1,
            arm.map(|a| a + 1).unwrap_or(0)
        );
    }
    println!("surplus: {}", format_sig12(matching.surplus(&matrix)));
    println!("optimal surplus (exhaustive): {}", format_sig12(optimal));
    println!(
        "iterations: {} (bound {})",
        trace.iterations, trace.iteration_bound
    );
    println!(
        "signaling: {} slots, {} bits/message ({} preference + {} bid)",
        trace.comm_slots,
        trace.bits_per_message(),
        trace.pref_bits,
        trace.bid_bits
    );
    Ok(())
}

fn run_repro(
    which: &str,
    seed: u64,
    runs: u32,
    out: Option<PathBuf>,
) -> Result<(), Box<dyn std::error::Error>> {
    let (configs, default_out) = match which {
        "fig1" => (recipes::fig1_configs(seed, runs), "fig1.csv"),
        "fig2" => (recipes::fig2_configs(seed, runs), "fig2.csv"),
        other => return Err(format!("unknown recipe {other:?}; use fig1 or fig2").into()),
    };
    let out = resolve_out(out.unwrap_or_else(|| PathBuf::from(default_out)));
    let results = recipes::run_recipe(configs, &out)?;
    for r in &results {
        println!(
            "{}: final mean regret {} over {} runs -> {}",
            r.name,
            format_sig12(r.output.final_mean_total()),
            runs,
            r.path.display()
        );
    }
    Ok(())
}
