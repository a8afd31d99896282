use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delayed_bandit::io::{emit_csv, write_metadata, METADATA_FILE};
use delayed_bandit::{concentration_check, metadata, run_batch, HarnessError, Result, Settings};
use delayed_bandit_core::bounds;

#[derive(Parser)]
#[command(name = "delayed-bandit", version, about = "Linear bandits with delayed, censored conversions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes and write traces, summary and metadata.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// otf_linucb | otf_lints | oracle | random
        #[arg(long)]
        policy: Option<String>,
        /// A | B | C | D
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run replications on a single thread.
        #[arg(long)]
        serial: bool,
    },
    /// Evaluate the OTFLinUCB regret upper bound and related quantities.
    Bounds {
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long)]
        d: usize,
        #[arg(long = "K", default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        tau: f64,
    },
    /// Minimax lower bound for the censored K-armed Bernoulli bandit.
    LowerBound {
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        tau: f64,
        /// Evaluate at this gap instead of tuning it.
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Empirical coverage of the confidence set.
    Coverage {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        reps: u64,
        #[arg(long)]
        serial: bool,
    },
}

fn load_settings(config: Option<&PathBuf>) -> Result<Settings> {
    match config {
        Some(path) => Settings::from_file(path),
        None => Ok(Settings::default()),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            policy,
            preset,
            runs,
            seed,
            out,
            serial,
        } => {
            let mut settings = load_settings(config.as_ref())?;
            settings.overlay(Settings {
                policy,
                preset,
                runs,
                seed,
                out,
                parallel: serial.then_some(false),
                ..Settings::default()
            });
            let cfg = settings.resolve()?;
            let (traces, stats) = run_batch(&cfg)?;
            emit_csv(&traces, &stats, &cfg.output)?;
            write_metadata(&cfg.output.join(METADATA_FILE), &metadata(&cfg)?)?;
            println!(
                "{} runs of {} rounds ({}): final regret mean {:.3} ± {:.3}, tau_m {:.4}; wrote {}",
                stats.runs,
                cfg.horizon,
                cfg.policy.kind,
                stats.final_mean(),
                stats.final_std(),
                cfg.tau(),
                cfg.output.display()
            );
        }
        Command::Bounds {
            horizon,
            d,
            k,
            lambda,
            delta,
            m,
            tau,
        } => {
            let f = bounds::exploration_radius(d, lambda, horizon, delta)?;
            let upper = bounds::theorem2_bound(horizon, d, lambda, delta, m, tau)?;
            println!("exploration_radius = {f}");
            println!("elliptical_potential_bound = {}", bounds::elliptical_potential_bound(d, lambda, horizon));
            println!("theorem2_bound = {upper}");
            if tau < 1.0 && k > 1 {
                let (gap, lower) = bounds::tuned_lower_bound(horizon, k, tau)?;
                println!("tuned_lower_bound = {lower} (gap = {gap})");
            }
        }
        Command::LowerBound { horizon, k, tau, gap } => match gap {
            Some(gap) => println!("lower_bound = {}", bounds::lower_bound_value(horizon, k, tau, gap)?),
            None => {
                let (gap, value) = bounds::tuned_lower_bound(horizon, k, tau)?;
                println!("lower_bound = {value}");
                println!("gap = {gap}");
            }
        },
        Command::Coverage { config, reps, serial } => {
            let mut settings = load_settings(config.as_ref())?;
            if serial {
                settings.parallel = Some(false);
            }
            let cfg = settings.resolve()?;
            let report = concentration_check(&cfg, reps)?;
            println!("coverage = {}", report.coverage());
            println!("covered = {}/{}", report.covered, report.reps);
            println!("tau_m = {}", report.tau);
            println!("worst_ratio = {}", report.worst_ratio);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HarnessError) -> u8 {
    e.exit_code() as u8
}
