use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deformdlm::cli::{self, Command};
use deformdlm::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "deformdlm",
    about = "Bayesian matrix-variate dynamic spatiotemporal modelling with spatial deformation"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic anisotropic dataset
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the data-augmentation MCMC and write a posterior archive
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Posterior-predictive interpolation at ungauged sites
    Interpolate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// DIC / PMSE / interval-score comparison across fitted archives
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        archives: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geweke and HPD summaries of a fitted archive
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (config_path, out, seed, command) = match args.command {
        Cmd::Simulate { config, out } => (config, out, None, Command::Simulate),
        Cmd::Fit { config, out, seed } => (config, out, seed, Command::Fit),
        Cmd::Interpolate {
            config,
            archive,
            out,
        } => (config, out, None, Command::Interpolate { archive }),
        Cmd::Compare {
            config,
            archives,
            out,
        } => (config, out, None, Command::Compare { archives }),
        Cmd::Diagnose {
            config,
            archive,
            out,
        } => (config, out, None, Command::Diagnose { archive }),
    };

    let phase = match &command {
        Command::Simulate => "simulate",
        Command::Fit => "fit",
        Command::Interpolate { .. } => "interpolate",
        Command::Compare { .. } => "compare",
        Command::Diagnose { .. } => "diagnose",
    };

    let mut cfg = match RunConfig::from_file(&config_path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error [config]: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(out) = out {
        cfg.out = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }

    match cli::run(&command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{phase}]: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
