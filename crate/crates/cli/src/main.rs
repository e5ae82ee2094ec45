use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_rom_cli::{run, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "spectral-rom", version, about = "Spectral ROM inversion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated evaluation points; overrides `spectral.lambdas`.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate boundary data for the true and reference media.
    Simulate(Common),
    /// Build the Galerkin and block-tridiagonal ROMs.
    Rom(Common),
    /// Extract the 1D staggered grid.
    Grid(Common),
    /// Internal solutions at the evaluation points.
    Internal(Common),
    /// Reconstruct q.
    Invert(Common),
    /// Run the invariant checks; exits 2 when any fails.
    Verify(Common),
    #[command(name = "repro-1d")]
    Repro1d(Common),
    #[command(name = "repro-2d")]
    Repro2d(Common),
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Rom(a) => (Command::Rom, a),
        Cmd::Grid(a) => (Command::Grid, a),
        Cmd::Internal(a) => (Command::Internal, a),
        Cmd::Invert(a) => (Command::Invert, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Repro1d(a) => (Command::Repro1d, a),
        Cmd::Repro2d(a) => (Command::Repro2d, a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(l) = args.lambda {
        cfg.spectral.lambdas = Some(l);
        cfg.validate()?;
    }
    let out = args.out.unwrap_or_else(|| cfg.output.dir.clone());
    run(cmd, &cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
