use std::path::PathBuf;
use std::process::ExitCode;

use alert_swarm_cli::{
    report_command, run_command, validate_config, CliError, OutputFormat, RunManifest, SeedSpec,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "alert-swarm",
    version,
    about = "Run seeded swarm threat-detection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment per seed and write metrics plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Seed count (`5`) or comma-separated list (`3,8,13`; `7,` for one seed).
        #[arg(long, default_value = "1")]
        seeds: SeedSpec,
        #[arg(long)]
        out: PathBuf,
        /// Per-tick metrics format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Check a config file and report the first violated rule.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-aggregate the metrics files of an output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn init_logging() {
    let env = env_logger::Env::default().filter_or("ALERT_SWARM_LOG", "info");
    env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .init();
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            seeds,
            out,
            format,
        } => {
            let manifest = RunManifest {
                config,
                seeds,
                out,
                format,
            };
            let summary = run_command(&manifest)?;
            log::info!(
                "wrote {} metrics file(s) and summary.json to {}",
                summary.seeds.len(),
                manifest.out.display()
            );
        }
        Command::Validate { config } => {
            validate_config(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Report { input } => {
            let summary = report_command(&input)?;
            print!("{}", summary.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
