use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steklame::config::{resolve, ConvergeArgs, DiskArgs, OptimizeArgs, SolveArgs, SweepArgs};
use steklame::{run, set_threads, CliError};

/// Steklov-Lamé eigenvalues of planar domains.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads for linear algebra.
    #[arg(long, global = true, env = "STEKLAME_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form spectrum of a disk.
    Disk(DiskArgs),
    /// Certified spectrum of a boundary file.
    Solve(SolveArgs),
    /// Error against N for selected eigenvalues.
    Converge(ConvergeArgs),
    /// Spectrum across a range of μ.
    Sweep(SweepArgs),
    /// Maximize one eigenvalue at unit area.
    Optimize(OptimizeArgs),
}

fn execute(cli: Cli) -> Result<(), CliError> {
    set_threads(cli.threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }));
    match cli.command {
        Command::Disk(a) => {
            let c = a.config.clone();
            run::disk(&resolve(a, c.as_deref())?)
        }
        Command::Solve(a) => {
            let c = a.config.clone();
            run::solve(&resolve(a, c.as_deref())?).map(|_| ())
        }
        Command::Converge(a) => {
            let c = a.config.clone();
            run::converge(&resolve(a, c.as_deref())?).map(|_| ())
        }
        Command::Sweep(a) => {
            let c = a.config.clone();
            run::sweep(&resolve(a, c.as_deref())?)
        }
        Command::Optimize(a) => {
            let c = a.config.clone();
            let state = run::optimize(&resolve(a, c.as_deref())?)?;
            println!(
                "status={} objective={} iterations={}",
                state.status.label(),
                state.value,
                state.iteration
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
