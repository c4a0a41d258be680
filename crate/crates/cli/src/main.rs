use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qclsim_cli::check::{run_suite, summary};
use qclsim_cli::config::RunConfig;
use qclsim_cli::runner::run_to_dir;
use qclsim_cli::{bracket_report, worker_count, CliError};

#[derive(Parser)]
#[command(name = "qclsim", version, about = "Quantum-classical surface-hopping simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads (default: all cores), capped by QCLSIM_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run an invariant suite: bracket, adiabatic, jump, thermostat, spin, sampling or all.
    Check {
        suite: String,
        /// Print the JSON report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Antisymmetry, self-bracket and Jacobi residuals of three fields at a point.
    Bracket {
        f1: String,
        f2: String,
        f3: String,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// canonical, spin, nose or nhc.
        #[arg(long, default_value = "canonical")]
        structure: String,
    },
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, output, threads } => {
            let cfg = RunConfig::load(&config)?;
            let env = std::env::var("QCLSIM_THREADS").ok();
            let workers = worker_count(threads, env.as_deref())?;
            let dir = output.unwrap_or_else(|| cfg.output.clone());
            let meta = run_to_dir(&cfg, &dir, workers)?;
            println!(
                "wrote {} ({} trajectories, {:.2} s)",
                dir.join("series.csv").display(),
                meta.n_trajectories,
                meta.wall_time_s
            );
            Ok(true)
        }
        Command::Check { suite, json } => {
            let items = run_suite(&suite)?;
            if json {
                println!("{}", to_json(&items)?);
            } else {
                print!("{}", summary(&items));
            }
            Ok(items.iter().all(|i| i.passed))
        }
        Command::Bracket { f1, f2, f3, at, hbar, structure } => {
            let report = bracket_report([&f1, &f2, &f3], &at, hbar, &structure)?;
            println!("{}", to_json(&report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if let CliError::Numerical { index, .. } = &e {
                log::error!("trajectory {index} failed");
            }
            eprintln!("qclsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
