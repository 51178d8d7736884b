use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{gamow_evolve, ks_entropy, lyapunov, pesin, prescription};
use config::{CommonArgs, UsageError};

/// Numerical experiments on chaos, entropy and semiclassical decay.
#[derive(Debug, Parser)]
#[command(name = "pesinlab", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lyapunov spectrum by tangent-map QR.
    Lyapunov(lyapunov::LyapunovArgs),
    /// Entropy of refined partitions and the entropy-rate estimate.
    KsEntropy(ks_entropy::KsEntropyArgs),
    /// Compare the entropy estimate with the positive Lyapunov sum.
    Pesin(pesin::PesinArgs),
    /// Trace decay test on a classical map or the Gamow model.
    Prescription(prescription::PrescriptionArgs),
    /// Evolve Gamow cell operators and trace one word's chain.
    GamowEvolve(gamow_evolve::GamowEvolveArgs),
}

fn setup_threads(common: &CommonArgs) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = common.threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = common;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    setup_threads(&cli.common)?;
    let c = &cli.common;
    match &cli.command {
        Command::Lyapunov(a) => lyapunov::run(c, a),
        Command::KsEntropy(a) => ks_entropy::run(c, a),
        Command::Pesin(a) => pesin::run(c, a),
        Command::Prescription(a) => prescription::run(c, a),
        Command::GamowEvolve(a) => gamow_evolve::run(c, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<pesinlab::Error>() {
        Some(
            pesinlab::Error::Config(_)
            | pesinlab::Error::Unsupported(_)
            | pesinlab::Error::Domain(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
