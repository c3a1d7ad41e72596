//! Categorical distributions over a discrete codebook.
//!
//! Logits are stored as `f64`. Filters exclude entries by setting them to
//! [`EXCLUDED`] (negative infinity), which softmax maps to probability zero.
//! NaN is never used as a marker.

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Sentinel logit for an entry removed from the support.
pub const EXCLUDED: f64 = f64::NEG_INFINITY;

/// Tolerance on `Σ p = 1` when validating probability vectors.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TokenDistribution {
    logits: Vec<f64>,
}

impl TokenDistribution {
    /// Requires at least two entries; each is finite or [`EXCLUDED`].
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.len() < 2 {
            return Err(Error::InvalidLogits(format!(
                "vocabulary size {} < 2",
                logits.len()
            )));
        }
        if let Some(i) = logits
            .iter()
            .position(|x| x.is_nan() || *x == f64::INFINITY)
        {
            return Err(Error::InvalidLogits(format!("logit {i} is {}", logits[i])));
        }
        Ok(Self { logits })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn into_logits(self) -> Vec<f64> {
        self.logits
    }

    pub fn vocab_size(&self) -> usize {
        self.logits.len()
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.logits[i] == EXCLUDED
    }

    pub fn has_exclusions(&self) -> bool {
        self.logits.contains(&EXCLUDED)
    }

    /// Index of the largest logit, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.logits)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Max-subtracted softmax. Excluded entries map to exactly zero.
pub fn softmax(d: &TokenDistribution) -> Result<Vec<f64>> {
    let max = d
        .logits
        .iter()
        .copied()
        .filter(|&x| x != EXCLUDED)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let mut out: Vec<f64> = d
        .logits
        .iter()
        .map(|&x| if x == EXCLUDED { 0.0 } else { (x - max).exp() })
        .collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    Ok(out)
}

/// Checks nonnegativity, finiteness and `Σ p = 1 ± 1e-9`.
pub fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {}",
            probs[i]
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`. Clamped to `[0, ln V]`.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    validate_probs(probs)?;
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    Ok(h.clamp(0.0, (probs.len() as f64).ln()))
}

/// Divides every non-excluded logit by `temperature`.
pub fn rescale_logits(d: &TokenDistribution, temperature: f64) -> Result<TokenDistribution> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::NonpositiveTemperature(temperature));
    }
    if temperature == 1.0 {
        return Ok(d.clone());
    }
    let logits = d
        .logits
        .iter()
        .map(|&x| {
            if x == EXCLUDED {
                EXCLUDED
            } else {
                x / temperature
            }
        })
        .collect();
    Ok(TokenDistribution { logits })
}

/// Indices sorted by descending value, ascending index on ties.
fn ranked(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Keeps the `k` highest logits; the lower index wins ties at rank `k`.
pub fn top_k_filter(d: &TokenDistribution, k: usize) -> Result<TokenDistribution> {
    if k < 1 {
        return Err(invalid("top_k", "must be at least 1"));
    }
    if k >= d.vocab_size() {
        return Ok(d.clone());
    }
    let mut logits = vec![EXCLUDED; d.vocab_size()];
    for &i in ranked(&d.logits).iter().take(k) {
        logits[i] = d.logits[i];
    }
    Ok(TokenDistribution { logits })
}

/// Nucleus filter: keeps the smallest descending-probability prefix whose
/// cumulative mass reaches `p`. The top entry is always kept.
pub fn top_p_filter(d: &TokenDistribution, p: f64) -> Result<TokenDistribution> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("top_p", format!("{p} not in (0, 1]")));
    }
    if p == 1.0 {
        return Ok(d.clone());
    }
    let probs = softmax(d)?;
    let mut logits = vec![EXCLUDED; d.vocab_size()];
    let mut cumulative = 0.0;
    for i in ranked(&probs) {
        if probs[i] == 0.0 {
            break;
        }
        logits[i] = d.logits[i];
        cumulative += probs[i];
        // absorb round-off from the softmax normalisation
        if cumulative + 1e-12 >= p {
            break;
        }
    }
    Ok(TokenDistribution { logits })
}

/// Classifier-free guidance: `uncond + scale · (cond − uncond)`.
pub fn cfg_combine(
    cond: &TokenDistribution,
    uncond: &TokenDistribution,
    scale: f64,
) -> Result<TokenDistribution> {
    if cond.vocab_size() != uncond.vocab_size() {
        return Err(Error::VocabMismatch {
            left: cond.vocab_size(),
            right: uncond.vocab_size(),
        });
    }
    if !(scale >= 1.0) || !scale.is_finite() {
        return Err(invalid("cfg_scale", format!("{scale} < 1")));
    }
    if cond.has_exclusions() || uncond.has_exclusions() {
        return Err(Error::InvalidLogits(
            "guidance requires unfiltered logits".into(),
        ));
    }
    if scale == 1.0 {
        return Ok(cond.clone());
    }
    let logits = cond
        .logits
        .iter()
        .zip(&uncond.logits)
        .map(|(&c, &u)| u + scale * (c - u))
        .collect();
    Ok(TokenDistribution { logits })
}

/// Inverse-CDF draw in ascending index order using one uniform.
pub fn sample_categorical(probs: &[f64], rng: &mut RngStream) -> Result<usize> {
    validate_probs(probs)?;
    Ok(inverse_cdf(probs, rng.uniform()))
}

/// The deterministic half of [`sample_categorical`]: first index whose
/// cumulative probability exceeds `u`.
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // u fell in the round-off gap above the final partial sum
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

const GUMBEL_CLAMP: f64 = 1e-12;

/// Standard Gumbel variate `−ln(−ln u)` for a given uniform.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    let u = u.clamp(GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP);
    -(-u.ln()).ln()
}

/// Draws `g ~ Gumbel(0, 1)`.
pub fn gumbel_noise(rng: &mut RngStream) -> f64 {
    gumbel_from_uniform(rng.uniform())
}
