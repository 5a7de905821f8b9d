use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tikfar::evaluation::MethodSpec;
use tikfar_cli::commands;
use tikfar_cli::config::{load_run_config, RunConfig};
use tikfar_cli::error::{CliError, Result};

/// FAR(1) operator estimation: simulation, fitting, benchmarking and the
/// rolling forecast protocol.
#[derive(Debug, Parser)]
#[command(name = "tikfar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a sample path from a benchmark regime.
    Simulate {
        /// Regime name: I, II, III, or the label of a custom regime in the config.
        #[arg(long)]
        regime: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit one estimator to a sample CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// fpca:TAU, fpca:K=INT, tikhonov:ALPHA or tikhonov:cv.
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the Monte Carlo benchmark.
    Benchmark {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Preprocess raw half-hourly data and run the rolling forecast.
    Rolling {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        refit: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the bias bound and the estimator oracles.
    Verify {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => load_run_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Simulate {
            regime,
            n,
            seed,
            out,
            config,
        } => commands::simulate(&load(config.as_ref())?, &regime, n, seed, &out),
        Command::Fit {
            input,
            method,
            out,
            config,
        } => {
            let method: MethodSpec = method.parse()?;
            commands::fit(&load(config.as_ref())?, &input, method, &out)
        }
        Command::Benchmark {
            config,
            out,
            threads,
        } => commands::benchmark(&load(config.as_ref())?, threads, &out),
        Command::Rolling {
            raw,
            out,
            window,
            refit,
            config,
            threads,
        } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(w) = window {
                cfg.rolling.window = w;
            }
            if let Some(r) = refit {
                cfg.rolling.refit_every = r;
            }
            if let Some(t) = threads {
                cfg.rolling.threads = t;
            }
            commands::rolling(&cfg, &raw, &out)
        }
        Command::Verify { out, config } => commands::verify(&load(config.as_ref())?, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| e.to_string());
    eprintln!("{record}");
    ExitCode::from(e.exit_code() as u8)
}
