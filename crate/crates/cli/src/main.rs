//! `execqvi`: solve, export, simulate and compare liquidation policies.

mod commands;
mod error;
mod run_config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use execqvi::config::KvMap;

use error::CliError;
use run_config::RunConfig;

#[derive(Parser)]
#[command(name = "execqvi", version, about = "Optimal liquidation with price recovery: solve, simulate, analyze")]
struct Cli {
    /// More log output (-v info, -vv debug with per-step solver diagnostics).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads for solver sweeps and path batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set T=3` (repeatable, applied in order).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    emit_config: bool,
    /// Artifact path (default: <output_dir>/policy.qvi).
    #[arg(long)]
    artifact: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal policy and save it as an artifact.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Write the policy at given times as CSV, one file per time.
    PolicyExport {
        #[command(flatten)]
        common: Common,
        /// Comma-separated snapshot times on the time grid.
        #[arg(long)]
        times: Option<String>,
    },
    /// Simulate paths under a saved policy and summarise liquidation rates.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve and simulate for each horizon in `t_list`.
    Frontier {
        #[command(flatten)]
        common: Common,
        /// Comma-separated horizons.
        #[arg(long)]
        t_list: Option<String>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn resolve(common: &Common, threads: Option<usize>, extra: Vec<(&str, String)>) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(CliError::io(p))?),
        None => None,
    };
    let mut overrides = Vec::new();
    for s in &common.set {
        overrides.push(KvMap::parse_assignment(s)?);
    }
    let mut push = |k: &str, v: String| overrides.push((k.to_string(), v));
    if let Some(a) = &common.artifact {
        push("artifact", a.display().to_string());
    }
    if let Some(o) = &common.output_dir {
        push("output_dir", o.display().to_string());
    }
    if let Some(t) = threads {
        push("threads", t.to_string());
    }
    for (k, v) in extra {
        push(k, v);
    }
    Ok(RunConfig::resolve(text.as_deref(), &overrides)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, extra) = match &cli.command {
        Command::Solve { common } => (common, vec![]),
        Command::PolicyExport { common, times } => {
            (common, times.iter().map(|t| ("snapshot_times", t.clone())).collect())
        }
        Command::Simulate { common, n_paths, seed } => {
            let mut e = vec![];
            e.extend(n_paths.map(|n| ("n_paths", n.to_string())));
            e.extend(seed.map(|s| ("seed", s.to_string())));
            (common, e)
        }
        Command::Frontier { common, t_list, n_paths, seed } => {
            let mut e = vec![];
            e.extend(t_list.iter().map(|t| ("t_list", t.clone())));
            e.extend(n_paths.map(|n| ("n_paths", n.to_string())));
            e.extend(seed.map(|s| ("seed", s.to_string())));
            (common, e)
        }
    };
    let cfg = resolve(common, cli.threads, extra)?;
    if common.emit_config {
        print!("{}", cfg.render());
        return Ok(());
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Solve { .. } => commands::solve(&cfg),
        Command::PolicyExport { .. } => commands::policy_export(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Frontier { .. } => commands::frontier_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
