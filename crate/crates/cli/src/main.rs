//! `fiat`: drives the commit, propose, audit, verify and decode phases of a
//! leakage audit, plus constraint benchmarks and per-feature MI reports.
//!
//! Exit codes: 0 success, 1 other failure, 2 parse or schema error,
//! 3 already committed, 4 invalid proof, 5 inconsistent decision,
//! 6 no result.

mod commands;
mod config;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiat_core::Error;

#[derive(Parser, Debug)]
#[command(name = "fiat", version, about = "Verifiable leakage audits of data representations")]
pub struct Cli {
    /// TOML audit configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the contract state and artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Proof backend id.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Fixes all randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset, its role file and a config.
    Synth {
        #[arg(long, default_value_t = 200)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Fixed threshold in nats for the written config; defaults to a
        /// fraction of the sensitive entropy.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Generate a Baby Jubjub key pair as NAME.sk and NAME.pk.
    Keygen {
        #[arg(long, default_value = "consumer")]
        name: String,
    },
    /// Commit the dataset hash, shape and threshold (owner).
    Commit,
    /// Register the representation and public key (consumer).
    Propose {
        #[arg(long, conflicts_with = "raw")]
        k: Option<usize>,
        /// Audit the raw non-sensitive columns instead of a PCA projection.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        pubkey: PathBuf,
    },
    /// Run the audit and prove it (owner, off-contract).
    Audit,
    /// Submit the statement and proof to the contract.
    Verify {
        #[arg(long)]
        statement: Option<PathBuf>,
        #[arg(long)]
        proof: Option<PathBuf>,
    },
    /// Decrypt the accepted representation (consumer).
    Decode {
        #[arg(long)]
        sk: PathBuf,
    },
    /// Constraint counts and timings per dataset size.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,200,300")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Only build the circuits.
        #[arg(long)]
        no_witness: bool,
    },
    /// Per-feature leakage of PCA projections and the raw data.
    MiReport {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::ParseError(_) | Error::SchemaError(_)) => 2,
        Some(Error::AlreadyCommitted) => 3,
        Some(Error::InvalidProof) => 4,
        Some(Error::InconsistentDecision) => 5,
        Some(Error::NoResult) => 6,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
