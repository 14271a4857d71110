use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use calderon_lab::run;

/// Deterministic experiment runner for the semilinear inverse problem on
/// a rectangle: forward solves, DN traces, higher-order linearizations,
/// Fourier reconstruction of the potential, identity verification, and a
/// stability probe. Identical configurations produce byte-identical
/// artifacts (modulo the manifest timestamp).
#[derive(Parser)]
#[command(name = "calderon-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` from the configuration).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the semilinear problem and write the solution and report.
    Forward(RunArgs),
    /// Write the DN trace of the boundary data.
    Dn(RunArgs),
    /// Compare finite-difference and direct m-th linearizations.
    Linearize(RunArgs),
    /// Sweep the frequency lattice and reconstruct the potential.
    Reconstruct(RunArgs),
    /// Run the identity, gauge, vanishing-order, completeness, and
    /// well-posedness checks.
    Verify(RunArgs),
    /// Tabulate DN-distance vs potential-distance for built-in
    /// perturbations.
    ProbeStability(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, args) = match cli.command {
        Command::Forward(a) => (run::Subcommand::Forward, a),
        Command::Dn(a) => (run::Subcommand::Dn, a),
        Command::Linearize(a) => (run::Subcommand::Linearize, a),
        Command::Reconstruct(a) => (run::Subcommand::Reconstruct, a),
        Command::Verify(a) => (run::Subcommand::Verify, a),
        Command::ProbeStability(a) => (run::Subcommand::ProbeStability, a),
    };
    match run::run(sub, &args.config, args.output) {
        Ok(dir) => {
            println!("artifacts written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
