//! Scale-wise (coarse-to-fine) decoding with per-scale temperature decay.
//!
//! Scale `s` of `S` multiplies each cell's dynamic temperature by
//! `1 − β · (s − ⌊S/2⌋)`: hotter than the entropy alone suggests on coarse
//! scales, cooler on fine ones. Far from the midpoint the factor turns
//! negative, so the result is clamped at `floor_temperature`.

use crate::error::{invalid, Result};
use crate::grid::{EntropyMap, Grid};
use crate::oracle::{shaped_at_with, LogitsOracle, Site};
use crate::rng::RngStream;
use crate::temperature::SamplerConfig;

const SCALE_TAG: u64 = 0x5343_414c;

pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_FLOOR_TEMPERATURE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleTempParams {
    beta: f64,
    scales: usize,
    floor_temperature: f64,
}

impl ScaleTempParams {
    pub fn new(beta: f64, scales: usize) -> Result<Self> {
        Self::with_floor(beta, scales, DEFAULT_FLOOR_TEMPERATURE)
    }

    pub fn with_floor(beta: f64, scales: usize, floor_temperature: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid("beta", format!("{beta} must be nonnegative")));
        }
        if scales == 0 {
            return Err(invalid("scales", "need at least one scale"));
        }
        if !(floor_temperature > 0.0) || !floor_temperature.is_finite() {
            return Err(invalid(
                "floor_temperature",
                format!("{floor_temperature} must be positive"),
            ));
        }
        Ok(Self {
            beta,
            scales,
            floor_temperature,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn floor_temperature(&self) -> f64 {
        self.floor_temperature
    }
}

/// Decay factor `1 − β · (s − ⌊S/2⌋)` before clamping; `s` is 1-based.
/// A one-scale ladder has nothing to decay across and gets factor 1.
pub fn scale_factor(s: usize, sp: &ScaleTempParams) -> f64 {
    if sp.scales == 1 {
        return 1.0;
    }
    1.0 - sp.beta * (s as f64 - (sp.scales / 2) as f64)
}

/// `max(T · (1 − β · (s − ⌊S/2⌋)), floor)`.
pub fn scale_temperature(temperature: f64, s: usize, sp: &ScaleTempParams) -> Result<f64> {
    if s < 1 || s > sp.scales {
        return Err(invalid("scale", format!("{s} not in 1..={}", sp.scales)));
    }
    if !(temperature > 0.0) {
        return Err(crate::error::Error::NonpositiveTemperature(temperature));
    }
    Ok((temperature * scale_factor(s, sp)).max(sp.floor_temperature))
}

/// Square-ish ladder halving down from the output grid: for a 16×16 grid,
/// `1×1, 2×2, 4×4, 8×8, 16×16`.
pub fn default_ladder(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut ladder = vec![(rows, cols)];
    let (mut r, mut c) = (rows, cols);
    while r > 1 || c > 1 {
        r = r.div_ceil(2);
        c = c.div_ceil(2);
        ladder.push((r, c));
    }
    ladder.reverse();
    ladder
}

pub fn validate_ladder(ladder: &[(usize, usize)]) -> Result<()> {
    if ladder.is_empty() {
        return Err(invalid("ladder", "empty"));
    }
    if ladder.iter().any(|&(r, c)| r == 0 || c == 0) {
        return Err(invalid("ladder", "every scale must be at least 1x1"));
    }
    if ladder
        .windows(2)
        .any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1)
    {
        return Err(invalid("ladder", "scale shapes must be nondecreasing"));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ScaleOutput {
    pub grids: Vec<Grid<u32>>,
    pub entropy: Vec<EntropyMap>,
    pub mean_entropy: Vec<f64>,
    /// Applied (post-decay) temperature per cell and scale.
    pub temperature: Vec<Grid<f64>>,
    pub model_invocations: usize,
}

impl ScaleOutput {
    pub fn final_grid(&self) -> &Grid<u32> {
        self.grids.last().expect("ladder is nonempty")
    }

    pub fn final_entropy(&self) -> &EntropyMap {
        self.entropy.last().expect("ladder is nonempty")
    }
}

/// Decodes each scale in one parallel step conditioned on all coarser
/// scales, concatenated in order.
pub fn scale_generate<M: LogitsOracle + ?Sized>(
    model: &M,
    ladder: &[(usize, usize)],
    cfg: &SamplerConfig,
    sp: &ScaleTempParams,
    rng: &RngStream,
) -> Result<ScaleOutput> {
    cfg.validate()?;
    validate_ladder(ladder)?;
    if sp.scales != ladder.len() {
        return Err(invalid(
            "scales",
            format!("{} configured, ladder has {}", sp.scales, ladder.len()),
        ));
    }
    let mut context: Vec<u32> = Vec::new();
    let mut out = ScaleOutput {
        grids: Vec::with_capacity(ladder.len()),
        entropy: Vec::with_capacity(ladder.len()),
        mean_entropy: Vec::with_capacity(ladder.len()),
        temperature: Vec::with_capacity(ladder.len()),
        model_invocations: 0,
    };
    for (idx, &(rows, cols)) in ladder.iter().enumerate() {
        let s = idx + 1;
        let mut sample_rng = rng.derive(SCALE_TAG).derive(s as u64);
        let n = rows * cols;
        let mut tokens = Vec::with_capacity(n);
        let mut eps = Vec::with_capacity(n);
        let mut temps = Vec::with_capacity(n);
        for i in 0..n {
            let shaped = shaped_at_with(
                model,
                &context,
                Site::from_linear(i, rows, cols),
                cfg,
                |t| scale_temperature(t, s, sp),
            )?;
            let trace = shaped.sample(&mut sample_rng)?;
            tokens.push(trace.token as u32);
            eps.push(trace.entropy);
            temps.push(trace.temperature);
        }
        context.extend_from_slice(&tokens);
        out.mean_entropy.push(eps.iter().sum::<f64>() / n as f64);
        out.grids.push(Grid::from_vec(rows, cols, tokens)?);
        out.entropy.push(Grid::from_vec(rows, cols, eps)?);
        out.temperature.push(Grid::from_vec(rows, cols, temps)?);
        out.model_invocations += 1;
    }
    Ok(out)
}
