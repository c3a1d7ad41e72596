//! One run per value of a single parameter, everything else held fixed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{execute, RunOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    T0,
    Alpha,
    Theta,
    K,
    CfgScale,
    E,
    Lambda,
    Beta,
}

const NAMES: &[(&str, SweepParam)] = &[
    ("T0", SweepParam::T0),
    ("alpha", SweepParam::Alpha),
    ("theta", SweepParam::Theta),
    ("K", SweepParam::K),
    ("cfg_scale", SweepParam::CfgScale),
    ("e", SweepParam::E),
    ("lambda", SweepParam::Lambda),
    ("beta", SweepParam::Beta),
];

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|&(_, p)| p)
            .ok_or_else(|| {
                let valid: Vec<&str> = NAMES.iter().map(|(n, _)| *n).collect();
                CliError::Invalid(format!(
                    "unknown sweep parameter {s:?}; expected one of {}",
                    valid.join(", ")
                ))
            })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = NAMES
            .iter()
            .find(|(_, p)| p == self)
            .map(|(n, _)| *n)
            .unwrap();
        f.write_str(name)
    }
}

impl SweepParam {
    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig, CliError> {
        let mut cfg = base.clone();
        match self {
            SweepParam::T0 => cfg.t0 = Some(value),
            SweepParam::Alpha => cfg.alpha = Some(value),
            SweepParam::Theta => cfg.theta = Some(value),
            SweepParam::K => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(CliError::Invalid(format!(
                        "K = {value} is not a positive integer"
                    )));
                }
                cfg.top_k = Some(value as usize);
            }
            SweepParam::CfgScale => cfg.cfg_scale = value,
            SweepParam::E => cfg.e = value,
            SweepParam::Lambda => cfg.lambda = value,
            SweepParam::Beta => cfg.beta = value,
        }
        Ok(cfg)
    }
}

/// Comma-separated numbers; an empty list is an error.
pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one value".into()));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Invalid(format!("sweep value {s:?} is not a number")))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: RunOutcome,
}

pub const HEADER: &str =
    "value,entropy_mean,entropy_variance,temperature_mean,model_invocations,acceptance_rate";

impl SweepRow {
    /// One CSV line; the acceptance rate is left empty outside spec modes.
    pub fn csv_line(&self) -> String {
        let o = &self.outcome;
        format!(
            "{},{},{},{},{},{}",
            self.value,
            o.mean_entropy(),
            o.entropy_variance(),
            o.mean_temperature(),
            o.model_invocations,
            o.acceptance_rate()
                .map(|r| r.to_string())
                .unwrap_or_default()
        )
    }
}

pub fn sweep(
    base: &RunConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let cfg = param.apply(base, value)?;
            Ok(SweepRow {
                value,
                outcome: execute(&cfg)?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Writes `sweep_<param>.csv` into `dir`.
pub fn write_sweep(
    dir: &Path,
    param: SweepParam,
    rows: &[SweepRow],
) -> Result<std::path::PathBuf, CliError> {
    let path = dir.join(format!("sweep_{param}.csv"));
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(&path, sweep_csv(rows)).map_err(io)?;
    Ok(path)
}
