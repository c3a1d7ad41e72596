//! Entropy-driven dynamic temperature.
//!
//! Each position's temperature is read off the entropy of its predicted
//! distribution: `T = T0 · exp(−ε / α) + θ`. Confident (low-entropy)
//! positions get a hot temperature and more randomness; uncertain
//! (high-entropy) positions are sampled close to `θ`.

use crate::dist::{
    cfg_combine, entropy, rescale_logits, sample_categorical, softmax, top_k_filter, top_p_filter,
    TokenDistribution,
};
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TempParams {
    t0: f64,
    alpha: f64,
    theta: f64,
}

impl TempParams {
    pub fn new(t0: f64, alpha: f64, theta: f64) -> Result<Self> {
        for (name, v) in [("T0", t0), ("alpha", alpha), ("theta", theta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be positive"),
                });
            }
        }
        Ok(Self { t0, alpha, theta })
    }

    /// Maximum amplitude added on top of the floor.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Entropy decay rate.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Temperature lower bound.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Temperature at zero entropy, the upper bound `T0 + θ`.
    pub fn max_temperature(&self) -> f64 {
        self.t0 + self.theta
    }
}

/// Published per-model settings, `(name, T0, α, θ)`.
pub const PRESETS: [(&str, f64, f64, f64); 4] = [
    ("llamagen", 2.5, 3.0, 0.6),
    ("lumina-mgpt", 2.0, 2.5, 0.6),
    ("meissonic", 2.5, 3.0, 0.7),
    ("star", 2.5, 3.0, 0.5),
];

pub fn preset(name: &str) -> Result<TempParams> {
    PRESETS
        .iter()
        .find(|(n, ..)| *n == name)
        .map(|&(_, t0, alpha, theta)| TempParams { t0, alpha, theta })
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            valid: PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", "),
        })
}

/// `T0 · exp(−ε / α) + θ`. Strictly decreasing in `eps`.
pub fn dynamic_temperature(eps: f64, params: &TempParams) -> Result<f64> {
    if eps < 0.0 || eps.is_nan() {
        return Err(Error::NegativeEntropy(eps));
    }
    Ok(params.t0 * (-eps / params.alpha).exp() + params.theta)
}

/// Everything the entropy-aware pipeline needs besides the logits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub temp: TempParams,
    /// Guidance scale; used only when an unconditional branch is supplied.
    pub cfg_scale: f64,
    pub top_k: Option<usize>,
    pub top_p: Option<f64>,
}

impl SamplerConfig {
    pub fn new(temp: TempParams) -> Self {
        Self {
            temp,
            cfg_scale: 1.0,
            top_k: None,
            top_p: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfg_scale >= 1.0) || !self.cfg_scale.is_finite() {
            return Err(invalid("cfg_scale", format!("{} < 1", self.cfg_scale)));
        }
        if self.top_k == Some(0) {
            return Err(invalid("top_k", "must be at least 1"));
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid("top_p", format!("{p} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// The sampling distribution at one position after the full pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapedDistribution {
    pub probs: Vec<f64>,
    /// Entropy of the guided, untruncated, unscaled distribution.
    pub entropy: f64,
    /// Temperature actually applied to the logits.
    pub temperature: f64,
}

/// guidance → entropy → dynamic temperature → top-K → top-p → softmax.
pub fn shape_distribution(
    cond: &TokenDistribution,
    uncond: Option<&TokenDistribution>,
    cfg: &SamplerConfig,
) -> Result<ShapedDistribution> {
    shape_distribution_with(cond, uncond, cfg, Ok)
}

/// As [`shape_distribution`], with `adjust` mapping the entropy-derived
/// temperature to the one applied (used for per-scale decay).
pub fn shape_distribution_with(
    cond: &TokenDistribution,
    uncond: Option<&TokenDistribution>,
    cfg: &SamplerConfig,
    adjust: impl FnOnce(f64) -> Result<f64>,
) -> Result<ShapedDistribution> {
    let guided = match uncond {
        Some(u) => cfg_combine(cond, u, cfg.cfg_scale)?,
        None => cond.clone(),
    };
    // round-off can leave a tiny negative sum; the clamp in `entropy` covers it
    let eps = entropy(&softmax(&guided)?)?.max(0.0);
    let temperature = adjust(dynamic_temperature(eps, &cfg.temp)?)?;
    let mut shaped = rescale_logits(&guided, temperature)?;
    if let Some(k) = cfg.top_k {
        shaped = top_k_filter(&shaped, k)?;
    }
    if let Some(p) = cfg.top_p {
        shaped = top_p_filter(&shaped, p)?;
    }
    Ok(ShapedDistribution {
        probs: softmax(&shaped)?,
        entropy: eps,
        temperature,
    })
}

/// One sampled token and what produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleTrace {
    pub token: usize,
    pub entropy: f64,
    pub temperature: f64,
    /// Probability of `token` under the shaped distribution.
    pub probability: f64,
    pub step: usize,
}

impl SampleTrace {
    pub fn at_step(self, step: usize) -> Self {
        Self { step, ..self }
    }
}

impl ShapedDistribution {
    pub fn sample(&self, rng: &mut RngStream) -> Result<SampleTrace> {
        let token = sample_categorical(&self.probs, rng)?;
        Ok(SampleTrace {
            token,
            entropy: self.entropy,
            temperature: self.temperature,
            probability: self.probs[token],
            step: 0,
        })
    }
}

/// Full entropy-aware sampling of a single position.
pub fn sample_entropy_aware(
    cond: &TokenDistribution,
    uncond: Option<&TokenDistribution>,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<SampleTrace> {
    shape_distribution(cond, uncond, cfg)?.sample(rng)
}
