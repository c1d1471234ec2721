use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lifted_mala::experiment::{load_config, run_experiment, Registry};

#[derive(Parser)]
#[command(name = "lifted-mala", version, about = "Benchmark runner for lifted MALA samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON config and write a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// `key=value`, value parsed as JSON when possible. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let Command::Run { config, output, threads, overrides } = Cli::parse().command;
    let registry = Registry::with_presets();
    let cfg = match load_config(&config, &overrides, &registry) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("invalid config {}:", config.display());
            for issue in &errors.0 {
                eprintln!("  {issue}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if threads == Some(0) {
        eprintln!("--threads must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let path = output
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));

    let report = match run_experiment(&cfg, &registry, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    print!("{}", report.summary());
    if let Err(e) = report.write_csv(&path) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    println!("wrote {}", path.display());
    ExitCode::SUCCESS
}
