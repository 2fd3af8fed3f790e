use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmlvamp::harness::{self, experiment, plot, selftest, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Learned ML-VAMP experiments")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(short, long, global = true, env = harness::OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    /// Monte Carlo trials per grid point (overrides the config).
    #[arg(long, global = true)]
    n_trials: Option<usize>,
    /// Base seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write training datasets for every scenario.
    Generate,
    /// Train one model per scenario, T and prior kind.
    Train,
    /// Evaluate all estimators and write results.csv.
    Evaluate,
    /// generate, train and evaluate.
    Sweep,
    /// Render rate-vs-INR curves from results.csv.
    Plot {
        /// Results file (default: results.csv in the output directory).
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Numerical self-checks.
    Selftest,
    /// Print the effective config as TOML.
    ShowConfig,
}

fn run(cli: Cli) -> lmlvamp::Result<()> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(d) = cli.output_dir {
        cfg.output_dir = d;
    }
    if let Some(n) = cli.n_trials {
        cfg.n_trials = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    match cli.command {
        Command::Generate => {
            let paths = experiment::generate(&cfg)?;
            println!("wrote {} datasets to {}", paths.len(), cfg.output_dir.display());
        }
        Command::Train => {
            let paths = experiment::train(&cfg)?;
            println!("wrote {} models to {}", paths.len(), cfg.output_dir.display());
        }
        Command::Evaluate => println!("{}", experiment::evaluate_and_write(&cfg)?.display()),
        Command::Sweep => println!("{}", experiment::sweep(&cfg)?.display()),
        Command::Plot { results } => {
            let path = results.unwrap_or_else(|| experiment::results_path(&cfg));
            let rows = harness::read_results(&path)?;
            println!("{}", plot::plot_rates(&cfg, &rows, &cfg.output_dir)?.display());
        }
        Command::Selftest => {
            let checks = selftest::run()?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(lmlvamp::Error::Results(format!("{failed} self-checks failed")));
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
