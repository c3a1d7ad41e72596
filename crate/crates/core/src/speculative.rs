//! Self-speculative (Jacobi) decoding.
//!
//! A window of draft tokens is re-evaluated by the model in one parallel
//! call per iteration. Each draft is verified against the distribution it
//! was drawn from in the previous iteration, left to right, and the scan
//! stops at the first rejection, which is replaced by a draw from the
//! residual `max(0, p_new − p_old)`. Two verification rules are provided:
//! the classical ratio test, and an entropy-aware test whose threshold
//! shrinks with the position's entropy so that confident positions pass
//! more easily.

use std::collections::VecDeque;

use crate::dist::{sample_categorical, validate_probs};
use crate::error::{invalid, Error, Result};
use crate::grid::{EntropyMap, Grid};
use crate::oracle::{shaped_at, LogitsOracle, Site};
use crate::rng::RngStream;
use crate::sequential::emission_stream;
use crate::temperature::{SamplerConfig, ShapedDistribution};

const DRAFT_TAG: u64 = 0x4452_4654;
const VERIFY_TAG: u64 = 0x5652_4659;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcceptMode {
    Baseline,
    EntropyAware,
}

/// How entropy damps the noise term of the entropy-aware threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseDecay {
    /// `1 − ε / λ`: decays from 1 at zero entropy to 0 at `ε = λ`.
    Divisor,
    /// `1 − λ · ε`, the product form.
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecAcceptParams {
    /// Entropy scale of the threshold.
    pub e: f64,
    /// Noise-decay constant.
    pub lambda: f64,
    pub mode: AcceptMode,
    pub decay: NoiseDecay,
}

impl Default for SpecAcceptParams {
    fn default() -> Self {
        Self {
            e: 8.0,
            lambda: 16.0,
            mode: AcceptMode::EntropyAware,
            decay: NoiseDecay::Divisor,
        }
    }
}

impl SpecAcceptParams {
    pub fn baseline() -> Self {
        Self {
            mode: AcceptMode::Baseline,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0) || !self.e.is_finite() {
            return Err(invalid("e", format!("{} must be positive", self.e)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid(
                "lambda",
                format!("{} must be positive", self.lambda),
            ));
        }
        Ok(())
    }
}

/// `min(1, p_new / p_old)`; a zero `p_old` yields 0 (forced rejection).
pub fn acceptance_ratio(p_new: f64, p_old: f64) -> f64 {
    if p_old <= 0.0 {
        return 0.0;
    }
    (p_new / p_old).min(1.0)
}

/// Accept iff `r < min(1, p_new / p_old)`.
pub fn baseline_accept(p_new: f64, p_old: f64, r: f64) -> bool {
    p_old > 0.0 && r < acceptance_ratio(p_new, p_old)
}

/// `clamp((ε/e) · [0.5 + (r − 0.5) · decay(ε)], 0, 1)`.
pub fn entropy_threshold(eps: f64, r: f64, sp: &SpecAcceptParams) -> f64 {
    let decay = match sp.decay {
        NoiseDecay::Divisor => 1.0 - eps / sp.lambda,
        NoiseDecay::Product => 1.0 - sp.lambda * eps,
    };
    ((eps / sp.e) * (0.5 + (r - 0.5) * decay)).clamp(0.0, 1.0)
}

/// Accept iff `min(1, p_new / p_old)` exceeds the entropy-scaled threshold.
pub fn entropy_accept(p_new: f64, p_old: f64, eps: f64, r: f64, sp: &SpecAcceptParams) -> bool {
    p_old > 0.0 && acceptance_ratio(p_new, p_old) > entropy_threshold(eps, r, sp)
}

/// Normalised positive part of `new − old`, or `None` if it is all zero.
pub fn residual_distribution(new_dist: &[f64], old_dist: &[f64]) -> Result<Option<Vec<f64>>> {
    if new_dist.len() != old_dist.len() {
        return Err(Error::VocabMismatch {
            left: new_dist.len(),
            right: old_dist.len(),
        });
    }
    let mut residual: Vec<f64> = new_dist
        .iter()
        .zip(old_dist)
        .map(|(&p, &q)| (p - q).max(0.0))
        .collect();
    let total: f64 = residual.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    for x in &mut residual {
        *x /= total;
    }
    Ok(Some(residual))
}

/// Draws from the residual; falls back to `new_dist` when the residual is
/// empty (the two distributions coincide).
pub fn residual_resample(new_dist: &[f64], old_dist: &[f64], rng: &mut RngStream) -> Result<usize> {
    validate_probs(new_dist)?;
    validate_probs(old_dist)?;
    match residual_distribution(new_dist, old_dist)? {
        Some(r) => sample_categorical(&r, rng),
        None => sample_categorical(new_dist, rng),
    }
}

/// One draft position.
#[derive(Clone, Debug)]
pub struct DraftSlot {
    pub position: usize,
    pub candidate: u32,
    /// Distribution `candidate` was drawn from, if it came from the model.
    pub prev_dist: Option<Vec<f64>>,
    draft_rng: RngStream,
    verify_rng: RngStream,
    emit_rng: RngStream,
}

impl DraftSlot {
    pub fn prev_prob(&self) -> Option<f64> {
        self.prev_dist.as_ref().map(|d| d[self.candidate as usize])
    }
}

/// The sliding draft window.
#[derive(Clone, Debug, Default)]
pub struct SpecWindow {
    slots: VecDeque<DraftSlot>,
}

impl SpecWindow {
    pub fn start(&self) -> Option<usize> {
        self.slots.front().map(|s| s.position)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> impl Iterator<Item = &DraftSlot> {
        self.slots.iter()
    }

    pub fn candidates(&self) -> Vec<u32> {
        self.slots.iter().map(|s| s.candidate).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecStats {
    pub model_invocations: usize,
    pub tokens_emitted: usize,
    /// Drafts that passed verification, per iteration.
    pub accepted_per_iteration: Vec<usize>,
    /// Tokens committed per iteration (accepted drafts plus the one
    /// resampled or freshly sampled token that ends the scan).
    pub emitted_per_iteration: Vec<usize>,
    pub drafts_verified: usize,
    pub drafts_accepted: usize,
    pub residual_resamples: usize,
    pub fresh_samples: usize,
}

impl SpecStats {
    /// Accepted over verified drafts; zero when nothing was verified.
    pub fn mean_acceptance_rate(&self) -> f64 {
        if self.drafts_verified == 0 {
            0.0
        } else {
            self.drafts_accepted as f64 / self.drafts_verified as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct JacobiOutput {
    pub tokens: Vec<u32>,
    pub stats: SpecStats,
    /// Entropy of the distribution each token was committed from.
    pub entropy: Vec<f64>,
    pub temperature: Vec<f64>,
}

impl JacobiOutput {
    /// Entropies laid out row-major; `cols` must divide the sequence length.
    pub fn entropy_map(&self, cols: usize) -> Result<EntropyMap> {
        if cols == 0 || !self.entropy.len().is_multiple_of(cols) {
            return Err(invalid(
                "cols",
                format!("{cols} does not tile {}", self.entropy.len()),
            ));
        }
        Grid::from_vec(self.entropy.len() / cols, cols, self.entropy.clone())
    }
}

/// Speculative decoding of `length` tokens laid out row-major on a grid of
/// `shape`, with a draft window of `window` positions.
///
/// Drafts start uniform over the codebook. A draft with no model-derived
/// distribution yet cannot be verified, so the scan resolves it by sampling
/// straight from its new distribution and stops there. With `window = 1`
/// every iteration commits exactly one such token, which reproduces
/// [`crate::sequential::sequential_generate`] under the same seed.
pub fn jacobi_decode<M: LogitsOracle + ?Sized>(
    model: &M,
    shape: (usize, usize),
    length: usize,
    window: usize,
    cfg: &SamplerConfig,
    sp: &SpecAcceptParams,
    rng: &RngStream,
) -> Result<JacobiOutput> {
    cfg.validate()?;
    sp.validate()?;
    let (rows, cols) = shape;
    if window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    if length == 0 || length > rows * cols {
        return Err(invalid(
            "length",
            format!("{length} does not fit a {rows}x{cols} grid"),
        ));
    }
    let vocab = model.vocab_size();
    let draft_base = rng.derive(DRAFT_TAG);
    let verify_base = rng.derive(VERIFY_TAG);

    let mut committed: Vec<u32> = Vec::with_capacity(length);
    let mut entropy = Vec::with_capacity(length);
    let mut temperature = Vec::with_capacity(length);
    let mut stats = SpecStats::default();
    let mut win = SpecWindow::default();

    while committed.len() < length {
        while win.len() < window && committed.len() + win.len() < length {
            let position = committed.len() + win.len();
            let mut draft_rng = draft_base.derive(position as u64);
            let candidate = draft_rng.below(vocab) as u32;
            win.slots.push_back(DraftSlot {
                position,
                candidate,
                prev_dist: None,
                draft_rng,
                verify_rng: verify_base.derive(position as u64),
                emit_rng: emission_stream(rng, position),
            });
        }

        // One parallel model call over the window; slot k sees the committed
        // prefix followed by the drafts ahead of it.
        stats.model_invocations += 1;
        let base_len = committed.len();
        let mut shaped: Vec<ShapedDistribution> = Vec::with_capacity(win.len());
        for slot in &win.slots {
            shaped.push(shaped_at(
                model,
                &committed,
                Site::from_linear(slot.position, rows, cols),
                cfg,
            )?);
            committed.push(slot.candidate);
        }
        committed.truncate(base_len);

        let mut accepted = 0;
        let mut emitted = 0;
        for (slot, new) in win.slots.iter_mut().zip(&shaped) {
            emitted += 1;
            let token = match &slot.prev_dist {
                Some(old) => {
                    let x = slot.candidate as usize;
                    let r = slot.verify_rng.uniform();
                    stats.drafts_verified += 1;
                    let ok = match sp.mode {
                        AcceptMode::Baseline => baseline_accept(new.probs[x], old[x], r),
                        AcceptMode::EntropyAware => {
                            entropy_accept(new.probs[x], old[x], new.entropy, r, sp)
                        }
                    };
                    if ok {
                        accepted += 1;
                        committed.push(slot.candidate);
                        entropy.push(new.entropy);
                        temperature.push(new.temperature);
                        continue;
                    }
                    stats.residual_resamples += 1;
                    residual_resample(&new.probs, old, &mut slot.emit_rng)?
                }
                None => {
                    stats.fresh_samples += 1;
                    sample_categorical(&new.probs, &mut slot.emit_rng)?
                }
            };
            committed.push(token as u32);
            entropy.push(new.entropy);
            temperature.push(new.temperature);
            break;
        }

        // Drafts behind the stop point are redrawn from their new
        // distributions, which become the reference for the next check.
        for (slot, new) in win.slots.iter_mut().zip(shaped).skip(emitted) {
            slot.candidate = sample_categorical(&new.probs, &mut slot.draft_rng)? as u32;
            slot.prev_dist = Some(new.probs);
        }
        win.slots.drain(..emitted);

        stats.accepted_per_iteration.push(accepted);
        stats.emitted_per_iteration.push(emitted);
        stats.drafts_accepted += accepted;
    }
    stats.tokens_emitted = committed.len();
    Ok(JacobiOutput {
        tokens: committed,
        stats,
        entropy,
        temperature,
    })
}
