//! Benchmark harness around `entropix-core`: runs a decoding mode against the
//! toy oracle from a flat config file and writes CSV/PGM artifacts.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod run;
pub mod sweep;

pub use config::{Mode, RunConfig};
pub use error::CliError;
pub use run::{execute, RunOutcome};
pub use sweep::{sweep, SweepParam, SweepRow};

use std::path::Path;

/// Reads a config file and applies the `ENTROPIX_SEED` override.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_file(path)?;
    cfg.apply_env()?;
    cfg.validate()?;
    Ok(cfg)
}
