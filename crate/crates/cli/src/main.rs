//! `brwlab`: run survival, extinction, spectral and approximation studies
//! on registered branching random walk scenarios.
//!
//! Exit status: 0 success, 1 invalid configuration or usage, 2 scenario or
//! analysis error, 3 a trial overflowed (outputs are still written).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{run, scenarios_table, write_outputs, RunError};
use crate::config::{Command, ConfigError, RunConfig, Settings, KEYS};

#[derive(Parser, Debug)]
#[command(name = "brwlab", version, about = "Branching random walk laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Local and global survival verdicts with evidence.
    Classify(RunArgs),
    /// Extinction probabilities (global or of a vertex set).
    Extinction(RunArgs),
    /// Growth rates of the first-moment matrix and return series.
    Spectral(RunArgs),
    /// Local growth of restrictions to balls around x0.
    Spatial(RunArgs),
    /// Truncation sweep over caps m, λ-sweep, or the full approximation report.
    Sweep(RunArgs),
    /// Oriented percolation on a window times the oriented half-line.
    Percolate(RunArgs),
    /// List registered scenarios and configuration keys.
    Scenarios,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario name.
    scenario: Option<String>,
    /// Scenario parameters as key=value.
    params: Vec<String>,
    /// Flat key=value configuration file; command-line values win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'P', long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// Any configuration key, e.g. --set tol=1e-10.
    #[arg(short, long, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Comma list of caps m.
    #[arg(long)]
    caps: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    x0: Option<u64>,
}

fn settings(args: &RunArgs) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    if let Some(path) = &args.config {
        s.load_file(path)?;
    }
    if let Ok(seed) = std::env::var("BRWLAB_SEED") {
        s.set("seed", &seed)?;
    }
    if let Some(name) = &args.scenario {
        s.set("scenario", name)?;
    }
    for p in args.params.iter().chain(&args.param) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("scenario parameter `{p}` is not key=value")))?;
        s.set(&format!("param.{}", k.trim()), v)?;
    }
    for kv in &args.set {
        s.set_pair(kv)?;
    }
    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("horizon", args.horizon.map(|v| v.to_string())),
        ("replicas", args.replicas.map(|v| v.to_string())),
        ("caps", args.caps.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("x0", args.x0.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, &v)?;
        }
    }
    Ok(s)
}

fn execute(command: Command, args: &RunArgs) -> ExitCode {
    let cfg = match settings(args).and_then(|s| RunConfig::from_settings(command, &s)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let keys: Vec<&str> = KEYS.iter().map(|k| k.0).collect();
            eprintln!("configuration keys: {}, param.<name>", keys.join(", "));
            return ExitCode::from(1);
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(RunError::Scenario(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&cfg, &outcome, &cfg.out) {
        let msg = match e {
            RunError::Io(e) => e.to_string(),
            RunError::Config(m) => m,
            RunError::Scenario(e) => e.to_string(),
        };
        eprintln!("error: cannot write outputs: {msg}");
        return ExitCode::from(2);
    }
    println!("{}", outcome.digest);
    println!("wrote {} files to {}", outcome.files.len() + 1, cfg.out.display());
    if outcome.overflow {
        eprintln!("warning: at least one trial overflowed the hard cap");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match &cli.command {
        Cmd::Scenarios => {
            print!("{}", scenarios_table());
            return ExitCode::SUCCESS;
        }
        Cmd::Classify(a) => (Command::Classify, a),
        Cmd::Extinction(a) => (Command::Extinction, a),
        Cmd::Spectral(a) => (Command::Spectral, a),
        Cmd::Spatial(a) => (Command::Spatial, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Percolate(a) => (Command::Percolate, a),
    };
    execute(command, args)
}
