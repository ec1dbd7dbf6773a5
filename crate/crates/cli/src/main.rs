use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::Overrides;

/// Solve, verify and cross-check Nash equilibria of relative-performance
/// investment games on a finite market.
#[derive(Parser)]
#[command(name = "relperf", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Newton tolerance for solves; residual tolerance for `verify`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Maximum Newton iterations.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Worker threads for atom and sweep-row parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the lognormal market volatility.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Override the lognormal market horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Override the number of quadrature nodes.
    #[arg(long, global = true)]
    nodes: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium and write the report and wealth CSV.
    Solve { config: PathBuf },
    /// Check first-order and budget residuals of a wealth CSV.
    Verify { config: PathBuf, wealth: PathBuf },
    /// Compare the solver against best-response iteration.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
    },
    /// Run a perturbation sweep and write its CSV table.
    Sweep { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(commands::exit::CONFIG as u8);
        }
    }
    let ov = Overrides {
        tol: cli.global.tol,
        max_iter: cli.global.max_iter,
        theta: cli.global.theta,
        horizon: cli.global.horizon,
        nodes: cli.global.nodes,
    };
    let code = match &cli.command {
        Command::Solve { config } => commands::solve(config, &ov),
        Command::Verify { config, wealth } => commands::verify(config, wealth, &ov),
        Command::Oracle { config, max_rounds } => commands::oracle(config, *max_rounds, &ov),
        Command::Sweep { config } => commands::sweep(config, &ov),
    };
    ExitCode::from(code as u8)
}
