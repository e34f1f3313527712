//! Command-line front end: binds JSON configs to the library pipeline with
//! reproducible seeds and machine-readable reports.
//!
//! Exit codes: 0 success, 2 factorization failure (singular block),
//! 3 poisedness/node failure, 4 verification above tolerance, 5 bad config
//! or input.

mod commands;
mod config;

use clap::{Parser, Subcommand};

use commands::{run, CommandKind, Flags};

#[derive(Parser)]
#[command(
    name = "mvopr",
    about = "Multivariate orthogonal polynomial families and their Darboux transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the orthogonal family from moment data and write it out.
    Compute {
        #[arg(long)]
        config: String,
        /// Override the config's scalar mode (rational|float).
        #[arg(long)]
        scalar: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Apply the Christoffel transformation at the requested degrees.
    Darboux {
        #[arg(long)]
        config: String,
        #[arg(long)]
        scalar: Option<String>,
        /// Override the node-search seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also compare against the perturbed-measure oracle.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Poisedness certificates and node-count diagnostics.
    PoisedCheck {
        #[arg(long)]
        config: String,
        #[arg(long)]
        scalar: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Full identity checklist: bands, LU/UL, determinants, kernel, Σ = SV,
    /// and oracle comparison.
    Verify {
        #[arg(long)]
        config: String,
        #[arg(long)]
        scalar: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Search for a poised node set and write it to a node file.
    SampleNodes {
        #[arg(long)]
        config: String,
        #[arg(long)]
        scalar: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let (kind, config, flags) = match cli.command {
        Command::Compute {
            config,
            scalar,
            out,
        } => (
            CommandKind::Compute,
            config,
            Flags {
                scalar,
                seed: None,
                out,
                verify: false,
            },
        ),
        Command::Darboux {
            config,
            scalar,
            seed,
            verify,
            out,
        } => (
            CommandKind::Darboux,
            config,
            Flags {
                scalar,
                seed,
                out,
                verify,
            },
        ),
        Command::PoisedCheck {
            config,
            scalar,
            seed,
            out,
        } => (
            CommandKind::PoisedCheck,
            config,
            Flags {
                scalar,
                seed,
                out,
                verify: false,
            },
        ),
        Command::Verify {
            config,
            scalar,
            seed,
            out,
        } => (
            CommandKind::Verify,
            config,
            Flags {
                scalar,
                seed,
                out,
                verify: true,
            },
        ),
        Command::SampleNodes {
            config,
            scalar,
            seed,
            out,
        } => (
            CommandKind::SampleNodes,
            config,
            Flags {
                scalar,
                seed,
                out,
                verify: false,
            },
        ),
    };
    match run(kind, &config, &flags) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}
