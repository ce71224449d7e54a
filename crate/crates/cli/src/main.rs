use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qsync::config::{parse_document, resolve, ConfigDoc};
use qsync::output::write_sidecar;
use qsync::{Command, CliError, Overrides};

#[derive(Parser)]
#[command(name = "qsync", version, about = "Steady states and synchronization of dissipative interacting qubits")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate the master equation and record fidelity and correlations.
    Evolve(Common),
    /// Solve for the steady state and write its density matrix.
    Steady(Common),
    /// Steady-state pairwise synchronization measures.
    Sync(Common),
    /// Parameter sweep (parallel, resumable).
    Sweep(Common),
    /// Check the product steady state against the no-go conditions.
    VerifyNogo(Common),
    /// Spin-1 commutator and steady-state correlation checks.
    Spin1Check(Common),
    /// Operator-algebra closure and steady-state uniqueness.
    AlgebraCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or the JSON sidecar of an earlier run.
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Named figure preset.
    #[arg(long)]
    preset: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "QSYNC_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Evolve(c) => (Command::Evolve, c),
            Sub::Steady(c) => (Command::Steady, c),
            Sub::Sync(c) => (Command::Sync, c),
            Sub::Sweep(c) => (Command::Sweep, c),
            Sub::VerifyNogo(c) => (Command::VerifyNogo, c),
            Sub::Spin1Check(c) => (Command::Spin1Check, c),
            Sub::AlgebraCheck(c) => (Command::AlgebraCheck, c),
        }
    }
}

fn execute(command: Command, args: Common) -> Result<(), CliError> {
    let overrides = Overrides {
        command: Some(command),
        preset: args.preset,
        output_path: args.out,
        worker_count: args.workers,
        seed: args.seed,
    };
    let doc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
            parse_document(&text)?
        }
        None => ConfigDoc::default(),
    };
    let cfg = resolve(doc, &overrides)?;
    let start = Instant::now();
    let outcome = qsync::run(&cfg)?;
    let sidecar = write_sidecar(&cfg, start.elapsed(), &outcome.results)?;
    println!("{} -> {}", cfg.command, cfg.output_path.display());
    println!("metadata -> {}", sidecar.display());
    println!("{}", serde_json::to_string_pretty(&outcome.results).unwrap_or_default());
    match outcome.check_failure {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
