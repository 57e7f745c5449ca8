use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dbs_leap::config::{self, ExperimentConfig};
use dbs_leap::{experiment, validate, Error};

const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "dbs-leap", version, about = "Drone base station placement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method on every slot and write report.csv and heatmaps.
    Run {
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the optimizer and queueing model against the reference oracles.
    Validate { config: PathBuf },
    /// Write one demand CSV per slot from a hotspot description.
    Generate {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the default configuration.
    Defaults,
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = config::load_config(&config)?;
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            let outcome = experiment::run_experiment(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(&outcome.report_path).map_err(|e| Error::Io {
                    path: outcome.report_path.clone(),
                    source: e,
                })?
            );
            eprintln!(
                "wrote {} and {} heatmap files to {}",
                outcome.report_path.display(),
                outcome.files.len(),
                cfg.output_dir.display()
            );
            if outcome.any_infeasible() {
                eprintln!("at least one slot is infeasible");
                return Ok(EXIT_INFEASIBLE);
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = config::load_config(&config)?;
            let report = validate::validate(&cfg)?;
            print!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Generate { spec, output } => {
            let spec = config::load_generate_spec(&spec)?;
            for p in config::generate_demand_files(&spec, &output)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Defaults => {
            print!("{}", ExperimentConfig::defaults().to_toml());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
