use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netepi_cli::{run, Command};

#[derive(Parser)]
#[command(name = "netepi", version, about = "Epidemics on dynamically rewiring random networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the configured ODE model.
    RunOde(RunArgs),
    /// Run an agent-based ensemble.
    RunAbm(RunArgs),
    /// Compare the ODE against an agent-based ensemble.
    Compare(RunArgs),
    /// First-order Sobol indices over time.
    Sensitivity(RunArgs),
    /// Phase-plane series for a pair of degrees.
    Phase(RunArgs),
    /// Fit parameters to observed incidence.
    Fit(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles and sensitivity runs.
    #[arg(long, env = "NETEPI_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write a matplotlib script for the outputs.
    #[arg(long)]
    plot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::RunOde(a) => (Command::RunOde, a),
        Cmd::RunAbm(a) => (Command::RunAbm, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Sensitivity(a) => (Command::Sensitivity, a),
        Cmd::Phase(a) => (Command::Phase, a),
        Cmd::Fit(a) => (Command::Fit, a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("netepi: config error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("netepi: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(command, &args.config, args.seed, &args.out, args.plot) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("netepi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
