//! `levy-limits`: batch front end for exponents, simulations, spike counts
//! and the acceptance suite.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Experiment, ExperimentConfig, ProfileArg, Tolerances};
use error::CliError;
use output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "levy-limits", version, about = "Lévy-subordinator limits of integrated diffusions")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a configuration file written by an earlier run.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    #[command(flatten)]
    Experiment(Experiment),
}

const DEFAULT_OUT: &str = "out";

fn resolve(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let g = cli.global;
    let mut cfg = match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(CliError::io(&config))?;
            ExperimentConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?
        }
        Command::Experiment(experiment) => ExperimentConfig {
            master_seed: levy_limits::verify::DEFAULT_SEED,
            workers: None,
            out: PathBuf::from(DEFAULT_OUT),
            profile: ProfileArg::default(),
            tolerances: Tolerances::default(),
            experiment,
        },
    };
    // explicit flags override the file
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if g.workers.is_some() {
        cfg.workers = g.workers;
    }
    if let Some(o) = g.out {
        cfg.out = o;
    }
    if let Some(p) = g.profile {
        cfg.profile = p;
    }
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {w} workers: {e}")))?;
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut out = OutDir::create(&cfg.out)?;
    let toml = cfg.to_toml().map_err(|e| CliError::Config(format!("cannot serialize the configuration: {e}")))?;
    out.text("config.toml", &toml)?;

    let result = commands::execute(cfg, &mut out);
    let (status, ledger, failure) = match &result {
        Ok(r) => match &r.tolerance_failure {
            Some(f) => ("tolerance_failure", r.ledger.clone(), Some(f.clone())),
            None => ("ok", r.ledger.clone(), None),
        },
        Err(e) => (e.kind(), None, Some(e.to_string())),
    };
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    let manifest = json!({
        "command": cfg.experiment.name(),
        "master_seed": cfg.master_seed,
        "workers": cfg.workers,
        "profile": cfg.profile,
        "version": env!("CARGO_PKG_VERSION"),
        "git_revision": "unknown",
        "started_unix": started,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "status": status,
        "failure": failure,
        "ledger": ledger,
        "outputs": files,
    });
    out.json("manifest.json", &manifest)?;
    match result?.tolerance_failure {
        Some(f) => Err(CliError::Tolerance(f)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = resolve(Cli::parse()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| format!("{{\"error\":\"{e}\"}}"));
            eprintln!("{report}");
            ExitCode::from(e.exit_code())
        }
    }
}
