//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Syntax problems (no `=`, unknown or repeated key, malformed number) are
//! parse errors carrying the line number; well-formed values that make no
//! sense for the run (κ outside `[0, 1]`, an unknown preset, ...) are
//! reported as invalid parameters once the whole file has been read.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use entropix_core::scale::{
    default_ladder, validate_ladder, DEFAULT_BETA, DEFAULT_FLOOR_TEMPERATURE,
};
use entropix_core::{
    preset, profile_rect, AcceptMode, NoiseDecay, OracleConfig, Rect, SamplerConfig,
    ScaleTempParams, SpecAcceptParams, TempParams,
};

use crate::error::CliError;

pub const SEED_ENV: &str = "ENTROPIX_SEED";

pub const KEYS: &[&str] = &[
    "mode",
    "seed",
    "oracle_seed",
    "vocab",
    "height",
    "width",
    "context_sensitivity",
    "background_kappa",
    "foreground_kappa",
    "rect",
    "preset",
    "t0",
    "alpha",
    "theta",
    "top_k",
    "top_p",
    "cfg_scale",
    "steps",
    "window",
    "length",
    "beta",
    "floor_temperature",
    "ladder",
    "e",
    "lambda",
    "noise_decay",
    "output",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    NextToken,
    Mask,
    Scale,
    SpecBaseline,
    SpecEntropy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NextToken => "next-token",
            Mode::Mask => "mask",
            Mode::Scale => "scale",
            Mode::SpecBaseline => "spec-baseline",
            Mode::SpecEntropy => "spec-entropy",
        }
    }

    pub fn is_speculative(self) -> bool {
        matches!(self, Mode::SpecBaseline | Mode::SpecEntropy)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "next-token" => Mode::NextToken,
            "mask" => Mode::Mask,
            "scale" => Mode::Scale,
            "spec-baseline" => Mode::SpecBaseline,
            "spec-entropy" => Mode::SpecEntropy,
            _ => {
                return Err(format!(
                    "unknown mode {s:?}; expected next-token, mask, scale, spec-baseline or spec-entropy"
                ))
            }
        })
    }
}

/// A fully resolved run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Seed of the toy oracle; follows `seed` unless set explicitly.
    pub oracle_seed: Option<u64>,
    pub vocab: usize,
    pub height: usize,
    pub width: usize,
    pub context_sensitivity: f64,
    pub background_kappa: f64,
    pub foreground_kappa: f64,
    /// `None` means the centred half-size rectangle.
    pub rect: Option<Rect>,
    pub preset: String,
    pub t0: Option<f64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub top_k: Option<usize>,
    pub top_p: Option<f64>,
    pub cfg_scale: f64,
    pub steps: usize,
    pub window: usize,
    pub length: Option<usize>,
    pub beta: f64,
    pub floor_temperature: f64,
    pub ladder: Option<Vec<(usize, usize)>>,
    pub e: f64,
    pub lambda: f64,
    pub noise_decay: NoiseDecay,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = SpecAcceptParams::default();
        Self {
            mode: Mode::NextToken,
            seed: 0,
            oracle_seed: None,
            vocab: 64,
            height: 16,
            width: 16,
            context_sensitivity: 1.0,
            background_kappa: 0.9,
            foreground_kappa: 0.1,
            rect: None,
            preset: "llamagen".into(),
            t0: None,
            alpha: None,
            theta: None,
            top_k: None,
            top_p: None,
            cfg_scale: 1.0,
            steps: 16,
            window: 16,
            length: None,
            beta: DEFAULT_BETA,
            floor_temperature: DEFAULT_FLOOR_TEMPERATURE,
            ladder: None,
            e: spec.e,
            lambda: spec.lambda,
            noise_decay: spec.decay,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Parse {
        line,
        message: format!("cannot parse {value:?} as a number for {key:?}"),
    })
}

/// `top,left,height,width`.
fn parse_rect(line: usize, value: &str) -> Result<Rect, CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Parse {
            line,
            message: format!("rect wants top,left,height,width; got {value:?}"),
        });
    }
    let n = parts
        .iter()
        .map(|p| parse_num::<usize>(line, "rect", p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Rect {
        top: n[0],
        left: n[1],
        height: n[2],
        width: n[3],
    })
}

/// `1x1,2x2,4x4`.
fn parse_ladder(line: usize, value: &str) -> Result<Vec<(usize, usize)>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .map(|s| {
            let (r, c) = s.split_once('x').ok_or_else(|| CliError::Parse {
                line,
                message: format!("ladder entry {s:?} is not ROWSxCOLS"),
            })?;
            Ok((parse_num(line, "ladder", r)?, parse_num(line, "ladder", c)?))
        })
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| CliError::Parse {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(CliError::Parse {
                    line,
                    message: format!("{key:?} already set on line {first}"),
                });
            }
            cfg.set(line, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "mode" => self.mode = value.parse().map_err(CliError::Invalid)?,
            "seed" => self.seed = parse_num(line, key, value)?,
            "oracle_seed" => self.oracle_seed = Some(parse_num(line, key, value)?),
            "vocab" => self.vocab = parse_num(line, key, value)?,
            "height" => self.height = parse_num(line, key, value)?,
            "width" => self.width = parse_num(line, key, value)?,
            "context_sensitivity" => self.context_sensitivity = parse_num(line, key, value)?,
            "background_kappa" => self.background_kappa = parse_num(line, key, value)?,
            "foreground_kappa" => self.foreground_kappa = parse_num(line, key, value)?,
            "rect" => self.rect = Some(parse_rect(line, value)?),
            "preset" => self.preset = value.to_string(),
            "t0" => self.t0 = Some(parse_num(line, key, value)?),
            "alpha" => self.alpha = Some(parse_num(line, key, value)?),
            "theta" => self.theta = Some(parse_num(line, key, value)?),
            "top_k" => self.top_k = Some(parse_num(line, key, value)?),
            "top_p" => self.top_p = Some(parse_num(line, key, value)?),
            "cfg_scale" => self.cfg_scale = parse_num(line, key, value)?,
            "steps" => self.steps = parse_num(line, key, value)?,
            "window" => self.window = parse_num(line, key, value)?,
            "length" => self.length = Some(parse_num(line, key, value)?),
            "beta" => self.beta = parse_num(line, key, value)?,
            "floor_temperature" => self.floor_temperature = parse_num(line, key, value)?,
            "ladder" => self.ladder = Some(parse_ladder(line, value)?),
            "e" => self.e = parse_num(line, key, value)?,
            "lambda" => self.lambda = parse_num(line, key, value)?,
            "noise_decay" => {
                self.noise_decay = match value {
                    "divisor" => NoiseDecay::Divisor,
                    "product" => NoiseDecay::Product,
                    _ => {
                        return Err(CliError::Invalid(format!(
                            "noise_decay {value:?}; expected divisor or product"
                        )))
                    }
                }
            }
            "output" => self.output = PathBuf::from(value),
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Applies `ENTROPIX_SEED` when set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("{SEED_ENV}={v:?} is not a u64")))?;
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn rect(&self) -> Rect {
        self.rect.unwrap_or_else(|| {
            Rect::centered(self.height, self.width, self.height / 2, self.width / 2)
        })
    }

    pub fn oracle(&self) -> Result<OracleConfig, CliError> {
        if self.height == 0 || self.width == 0 {
            return Err(CliError::Invalid(
                "height and width must be at least 1".into(),
            ));
        }
        let profile = profile_rect(
            self.shape(),
            self.background_kappa,
            self.foreground_kappa,
            self.rect(),
        )?;
        let mut oc = OracleConfig::new(profile, self.oracle_seed.unwrap_or(self.seed));
        oc.vocab = self.vocab;
        oc.context_sensitivity = self.context_sensitivity;
        oc.validate()?;
        Ok(oc)
    }

    pub fn temp_params(&self) -> Result<TempParams, CliError> {
        let base = preset(&self.preset)?;
        Ok(TempParams::new(
            self.t0.unwrap_or(base.t0()),
            self.alpha.unwrap_or(base.alpha()),
            self.theta.unwrap_or(base.theta()),
        )?)
    }

    pub fn sampler(&self) -> Result<SamplerConfig, CliError> {
        let mut s = SamplerConfig::new(self.temp_params()?);
        s.cfg_scale = self.cfg_scale;
        s.top_k = self.top_k;
        s.top_p = self.top_p;
        s.validate()?;
        Ok(s)
    }

    pub fn ladder(&self) -> Result<Vec<(usize, usize)>, CliError> {
        let ladder = self
            .ladder
            .clone()
            .unwrap_or_else(|| default_ladder(self.height, self.width));
        validate_ladder(&ladder)?;
        if ladder.last() != Some(&self.shape()) {
            return Err(CliError::Invalid(format!(
                "last ladder scale {:?} must equal the grid {}x{}",
                ladder.last(),
                self.height,
                self.width
            )));
        }
        Ok(ladder)
    }

    pub fn scale_params(&self) -> Result<ScaleTempParams, CliError> {
        Ok(ScaleTempParams::with_floor(
            self.beta,
            self.ladder()?.len(),
            self.floor_temperature,
        )?)
    }

    pub fn spec_params(&self) -> Result<SpecAcceptParams, CliError> {
        let sp = SpecAcceptParams {
            e: self.e,
            lambda: self.lambda,
            mode: if self.mode == Mode::SpecEntropy {
                AcceptMode::EntropyAware
            } else {
                AcceptMode::Baseline
            },
            decay: self.noise_decay,
        };
        sp.validate()?;
        Ok(sp)
    }

    /// Sequence length for speculative runs: the whole grid by default, and
    /// always a whole number of rows so the entropy map stays rectangular.
    pub fn length(&self) -> Result<usize, CliError> {
        let n = self.length.unwrap_or(self.height * self.width);
        if n == 0 || n > self.height * self.width || !n.is_multiple_of(self.width) {
            return Err(CliError::Invalid(format!(
                "length {n} must be a positive multiple of width {} up to {}",
                self.width,
                self.height * self.width
            )));
        }
        Ok(n)
    }

    /// Checks every parameter the chosen mode reads.
    pub fn validate(&self) -> Result<(), CliError> {
        self.oracle()?;
        self.sampler()?;
        match self.mode {
            Mode::NextToken => {}
            Mode::Mask => {
                if self.steps == 0 || self.steps > self.height * self.width {
                    return Err(CliError::Invalid(format!(
                        "steps {} must be in 1..={}",
                        self.steps,
                        self.height * self.width
                    )));
                }
            }
            Mode::Scale => {
                self.scale_params()?;
            }
            Mode::SpecBaseline | Mode::SpecEntropy => {
                self.spec_params()?;
                self.length()?;
                if self.window == 0 {
                    return Err(CliError::Invalid("window must be at least 1".into()));
                }
            }
        }
        Ok(())
    }
}
