use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rydsim::runner::{self, parse_config, ConfigError, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "rydsim", version, about = "Rydberg GHZ-state and controlled-phase gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write timeseries.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the metric over the (delta, gamma) grid and write scan.csv.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (0 = one per CPU).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in scenarios.
    ListScenarios,
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        key: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_config(&text)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => load(&config).and_then(|c| {
            let r = runner::run_scenario(&c, out.as_deref())?;
            let (peak, t) = r.main.peak();
            println!("peak {} = {peak:.6} at t = {t:.4}", c.metric);
            Ok(())
        }),
        Command::Scan { config, workers, out } => load(&config).and_then(|c| {
            let r = runner::run_scan(&c, workers, out.as_deref())?;
            println!("evaluated {} grid points", r.len());
            Ok(())
        }),
        Command::ListScenarios => {
            for (name, about) in runner::list_scenarios() {
                println!("{name:<10} {about}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
