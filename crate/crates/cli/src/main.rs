use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};
use kompaneets_core::scenario::{self, ScenarioConfig};
use kompaneets_core::verify::{self, Suite, VerifyOptions};
use kompaneets_core::Error;

/// Photon spectrum transport on the half-line: simulation, sweeps and checks.
#[derive(Debug, Parser)]
#[command(name = "kompaneets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write snapshots.csv and series.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override a config field, e.g. `--set t_end=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite and write report.json.
    Verify {
        #[arg(long, value_parser = PossibleValuesParser::new(Suite::NAMES))]
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seed for randomized pairs.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent suites.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare viscous runs against the hyperbolic run and write sweep.csv.
    SweepViscosity {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated viscosities.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        eps: Vec<f64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the sweep.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load(path: &PathBuf, set: &[String], out: Option<PathBuf>) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut config = scenario::parse_config_with(&text, set)?;
    if let Some(out) = out {
        config.output_dir = out;
    }
    Ok(config)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, set, out } => {
            let config = load(&config, &set, out)?;
            let (result, files) = scenario::run_scenario(&config)?;
            let last = result.series.last().expect("series holds the initial row");
            println!("wrote {} and {}", files.snapshots.display(), files.series.display());
            println!(
                "t = {}: N = {:.6}, condensate = {:.6}, alpha_fit = {:.4}, ledger residual = {:.2e}",
                last.t, last.photon_number, last.condensate_mass, last.alpha_fit, result.ledger_residual
            );
            Ok(())
        }
        Command::Verify { suite, out, seed, jobs } => {
            let suite: Suite = suite.parse()?;
            let mut options = VerifyOptions::default();
            if let Some(seed) = seed {
                options.seed = seed;
            }
            let pool = rayon_pool(jobs)?;
            let report = pool.install(|| verify::run_suite(suite, &options))?;
            for check in report.checks() {
                println!("{check}");
            }
            fs::create_dir_all(&out)?;
            let path = out.join("report.json");
            fs::write(&path, serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
            println!("wrote {}", path.display());
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::SweepViscosity { config, eps, set, out, jobs } => {
            let config = load(&config, &set, out)?;
            let rows = scenario::sweep_viscosity(&config, &eps, jobs)?;
            fs::create_dir_all(&config.output_dir)?;
            let path = config.output_dir.join("sweep.csv");
            scenario::write_sweep(&path, &rows)?;
            for row in &rows {
                println!("epsilon = {:e}: L1 = {:.6e}", row.epsilon, row.l1_to_godunov);
            }
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn rayon_pool(jobs: usize) -> Result<scenario::Pool, Failure> {
    scenario::worker_pool(jobs).map_err(Failure::from)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
