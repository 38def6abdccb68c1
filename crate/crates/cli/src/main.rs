use std::path::PathBuf;
use std::process::ExitCode;

use adbudget_core::experiment::{emit_reports, run_experiment, ExperimentConfig};
use adbudget_core::market::BurstyGenerator;
use adbudget_core::{Error, PricePmf};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adbudget",
    version,
    about = "Budget-constrained bidding experiments"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write reports.
    Run {
        config: PathBuf,
        /// Output directory for the report files.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config trial count.
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Write a synthetic bursty `price,click` replay file.
    SynthReplay {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Calm prices are uniform on `base_lo..=base_hi`.
        #[arg(long, default_value_t = 2)]
        base_lo: u32,
        #[arg(long, default_value_t = 20)]
        base_hi: u32,
        /// Burst prices multiply the calm price by a factor in `spike_lo..=spike_hi`.
        #[arg(long, default_value_t = 3)]
        spike_lo: u32,
        #[arg(long, default_value_t = 8)]
        spike_hi: u32,
        #[arg(long, default_value_t = 0.03)]
        burst_start: f64,
        #[arg(long, default_value_t = 0.85)]
        burst_stay: f64,
        #[arg(long, default_value_t = 1.0)]
        ctr: f64,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::UnknownPolicy { .. }
            | Error::Parse { .. }
            | Error::EmptyReplay(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidDistribution(_)
    )
}

fn run(
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    trials: Option<u32>,
) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&config).map_err(Failure::Config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate().map_err(Failure::Config)?;
    let result = run_experiment(&cfg).map_err(|e| {
        if is_config_error(&e) {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    })?;
    emit_reports(&result, &out).map_err(Failure::Runtime)?;

    println!("budget {} reference {:.4}", result.budget, result.reference);
    if result.truncated {
        println!("replay shorter than requested periods; last period truncated");
    }
    println!("{:<24} {:>10} {:>10}", "policy", "mean_ratio", "std");
    for p in &result.policies {
        println!(
            "{:<24} {:>10.4} {:>10.4}",
            p.name, p.mean_ratio, p.std_ratio
        );
    }
    println!("reports written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
        } => run(config, out, seed, trials),
        Command::SynthReplay {
            out,
            len,
            seed,
            base_lo,
            base_hi,
            spike_lo,
            spike_hi,
            burst_start,
            burst_stay,
            ctr,
        } => PricePmf::uniform(base_lo, base_hi)
            .and_then(|base| {
                BurstyGenerator {
                    base,
                    spike_factor: (spike_lo, spike_hi),
                    burst_start,
                    burst_stay,
                    ctr,
                }
                .generate(len, seed)
            })
            .map_err(Failure::Config)
            .and_then(|seq| {
                std::fs::write(&out, seq.to_csv()).map_err(|e| Failure::Runtime(e.into()))
            }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
