use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entropix_cli::sweep::{parse_values, sweep_csv, write_sweep};
use entropix_cli::{artifacts, execute, load_config, sweep, CliError, SweepParam};

#[derive(Parser)]
#[command(
    name = "entropix",
    version,
    about = "Entropy-informed decoding benchmarks on a toy oracle"
)]
struct Cli {
    /// Write artifacts here instead of the config's `output` directory.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one decode and write tokens.csv, entropy.csv, entropy.pgm, report.csv.
    Generate { config: PathBuf },
    /// Re-run the decode once per value of PARAM and print a CSV table.
    Sweep {
        config: PathBuf,
        /// T0, alpha, theta, K, cfg_scale, e, lambda or beta.
        param: String,
        /// Comma-separated values, e.g. 1,2,3.
        #[arg(default_value = "")]
        values: String,
    },
    /// Run one decode and write only entropy.pgm and entropy.csv.
    EntropyMap { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config } => {
            let mut cfg = load_config(&config)?;
            if let Some(o) = cli.output {
                cfg.output = o;
            }
            let out = execute(&cfg)?;
            artifacts::write_all(&cfg.output, &out)?;
            eprintln!(
                "{}: {} tokens, {} model invocations, mean entropy {:.4} nats, {:.3}s -> {}",
                out.mode.name(),
                out.tokens_emitted,
                out.model_invocations,
                out.mean_entropy(),
                out.wall_time.as_secs_f64(),
                cfg.output.display()
            );
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(o) = cli.output {
                cfg.output = o;
            }
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let rows = sweep(&cfg, param, &values)?;
            print!("{}", sweep_csv(&rows));
            let path = write_sweep(&cfg.output, param, &rows)?;
            eprintln!("{} rows -> {}", rows.len(), path.display());
        }
        Command::EntropyMap { config } => {
            let mut cfg = load_config(&config)?;
            if let Some(o) = cli.output {
                cfg.output = o;
            }
            let out = execute(&cfg)?;
            artifacts::write_entropy(&cfg.output, &out)?;
            eprintln!(
                "entropy map {}x{}, mean {:.4} nats -> {}",
                out.entropy.rows(),
                out.entropy.cols(),
                out.mean_entropy(),
                cfg.output.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
