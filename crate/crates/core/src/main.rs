use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use physplan::persist::{cmd_eval, cmd_report, cmd_rollout, cmd_train};
use serde::Serialize;

/// Train, evaluate and inspect the tool-orchestrating planner.
#[derive(Parser)]
#[command(name = "physplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write checkpoints, logs and a final evaluation.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Config override, `key.path=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint (or the untrained policy) on a scene bank.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        bank_seed: Option<u64>,
    },
    /// Run one episode and dump its trajectory and memory.
    Rollout {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Index into the training bank.
        #[arg(long, default_value_t = 0)]
        scene: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the scripted reference planner instead of a policy.
        #[arg(long)]
        oracle: bool,
    },
    /// Aggregate run logs into CSV plot data.
    Report {
        #[arg(long)]
        log_dir: PathBuf,
        /// Output directory (default: the log directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(value: &T) -> physplan::Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| physplan::Error::Data(format!("cannot serialize output: {e}")))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(physplan::Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> physplan::Result<()> {
    match cli.command {
        Command::Train { config, overrides } => {
            let out = cmd_train(config.as_deref(), &overrides)?;
            print_json(&serde_json::json!({
                "strategy": out.strategy,
                "final_checkpoint": out.final_checkpoint,
                "checkpoints": out.checkpoints,
                "log_file": out.log_file,
                "determinism_hash": out.determinism_hash,
                "eval": {
                    "overall": out.eval.overall,
                    "per_kind": out.eval.per_kind,
                    "curves": out.eval.curves,
                },
            }))
        }
        Command::Eval {
            config,
            overrides,
            checkpoint,
            bank_seed,
        } => {
            let report = cmd_eval(config.as_deref(), &overrides, checkpoint.as_deref(), bank_seed)?;
            print_json(&serde_json::json!({
                "overall": report.overall,
                "per_kind": report.per_kind,
                "curves": report.curves,
                "violation_pct": report.violation_pct,
            }))
        }
        Command::Rollout {
            config,
            overrides,
            checkpoint,
            scene,
            seed,
            oracle,
        } => print_json(&cmd_rollout(config.as_deref(), &overrides, checkpoint.as_deref(), scene, seed, oracle)?),
        Command::Report { log_dir, out } => {
            let out = out.unwrap_or_else(|| log_dir.clone());
            print_json(&cmd_report(&log_dir, &out)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
