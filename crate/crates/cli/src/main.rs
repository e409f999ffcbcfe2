//! Command-line front end for the `finkey` library: finite-size key rates,
//! figure-style sweeps, QBER thresholds, and numeric verification of the
//! guessing-probability bound, emitted as CSV with a JSON metadata sidecar.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::{
    CertificateArgs, RateArgs, SweepNArgs, SweepQberArgs, ThresholdArgs, Verdict, VerifyPgArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "finkey",
    version,
    about = "Finite-size key-rate certification for entanglement-based QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Key rates for one protocol configuration.
    Rate(RateArgs),
    /// Key rates across a logarithmic block-size grid.
    SweepN(SweepNArgs),
    /// Key rates across a linear QBER grid.
    SweepQber(SweepQberArgs),
    /// Zero-rate QBER thresholds.
    Threshold(ThresholdArgs),
    /// Check the closed-form guessing probability against numeric oracles.
    VerifyPg(VerifyPgArgs),
    /// Build and verify fidelity certificates.
    Certificate(CertificateArgs),
}

fn main() -> ExitCode {
    match commands::run(Cli::parse().command) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail(reason)) => {
            eprintln!("verification failed: {reason}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
