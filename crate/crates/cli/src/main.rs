use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wpb::{parse_config, run_scenario, spectrum, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "wpb", version, about = "Gaussian wave-packet simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write frames, tables, metrics and plots.
    Run {
        config: PathBuf,
        /// Output directory (overrides WPB_OUT_DIR and output.dir in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every k-th frame.
        #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
        frames_every: Option<u64>,
        /// Suppress the metrics summary on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Check a config file and print its resolved form.
    Validate { config: PathBuf },
    /// Print the lowest grid levels next to the brigade levels as JSON.
    Spectrum {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

/// Print to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            frames_every,
            quiet,
        } => {
            let cfg = parse_config(&config)?;
            let opts = RunOptions {
                out_dir: out,
                frames_every: frames_every.map(|k| k as usize),
            };
            let report = run_scenario(&cfg, &opts)?;
            if !quiet {
                emit(
                    &serde_json::to_string_pretty(&serde_json::json!({
                        "scenario": cfg.scenario.name(),
                        "out_dir": report.out_dir,
                        "files": report.manifest.files.len(),
                        "metrics": report.metrics,
                    }))
                    .expect("JSON values serialize"),
                );
            }
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            emit(&cfg.canonical_json());
        }
        Command::Spectrum { config, levels } => {
            if levels == 0 {
                return Err(CliError::config("--levels", "must be at least 1"));
            }
            let cfg = parse_config(&config)?;
            let value = spectrum(&cfg, levels)?;
            emit(&serde_json::to_string_pretty(&value).expect("JSON values serialize"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
