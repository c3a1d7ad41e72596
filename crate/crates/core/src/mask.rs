//! Mask-prediction decoding.
//!
//! Every step samples all still-masked cells in parallel, scores each sample
//! with a Gumbel-perturbed confidence `ln p + T · g` (where `T` is the cell's
//! dynamic temperature), and accepts the `k_t` highest-scoring cells.
//! Confident cells get hot temperatures and therefore noisier scores, so the
//! acceptance order is less greedy in flat regions.

use std::f64::consts::FRAC_PI_2;

use crate::dist::gumbel_noise;
use crate::error::{invalid, Error, Result};
use crate::grid::{EntropyMap, Grid};
use crate::oracle::{shaped_at, LogitsOracle, Site};
use crate::rng::RngStream;
use crate::temperature::SamplerConfig;

const SAMPLE_TAG: u64 = 0x4d53_4d50;
const GUMBEL_TAG: u64 = 0x4d47_4d42;

#[derive(Clone, Debug, PartialEq)]
pub struct MaskState {
    pub accepted: Grid<bool>,
    /// Token grid; meaningful only where `accepted` is set, holds the mask
    /// id elsewhere.
    pub tokens: Grid<u32>,
    pub step: usize,
    pub total_steps: usize,
}

impl MaskState {
    pub fn new(rows: usize, cols: usize, total_steps: usize, mask_token: u32) -> Self {
        Self {
            accepted: Grid::filled(rows, cols, false),
            tokens: Grid::filled(rows, cols, mask_token),
            step: 0,
            total_steps,
        }
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted.as_slice().iter().filter(|&&a| a).count()
    }

    pub fn remaining(&self) -> usize {
        self.accepted.len() - self.accepted_count()
    }

    pub fn is_complete(&self) -> bool {
        self.accepted.as_slice().iter().all(|&a| a)
    }
}

/// How many cells each step accepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSchedule {
    counts: Vec<usize>,
}

impl StepSchedule {
    /// Every count must be at least one.
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("steps", "schedule needs at least one step"));
        }
        if counts.contains(&0) {
            return Err(invalid(
                "steps",
                "every step must accept at least one token",
            ));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total_steps(&self) -> usize {
        self.counts.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Cosine schedule: after step `t` of `T`, a fraction `1 − cos(π/2 · t/T)`
/// of the grid is accepted. Cumulative counts are rounded, the last step
/// takes the remainder, empty steps borrow from the largest, and the counts
/// are sorted so that later steps never accept fewer tokens.
pub fn cosine_schedule(total_tokens: usize, total_steps: usize) -> Result<StepSchedule> {
    if total_steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if total_steps > total_tokens {
        return Err(invalid(
            "steps",
            format!("{total_steps} steps for {total_tokens} tokens"),
        ));
    }
    let cumulative = |t: usize| -> usize {
        if t == total_steps {
            total_tokens
        } else {
            let frac = 1.0 - (FRAC_PI_2 * t as f64 / total_steps as f64).cos();
            ((total_tokens as f64 * frac).round() as usize).min(total_tokens)
        }
    };
    let mut counts: Vec<usize> = (1..=total_steps)
        .map(|t| cumulative(t) - cumulative(t - 1))
        .collect();
    while let Some(z) = counts.iter().position(|&k| k == 0) {
        let (big, _) = counts
            .iter()
            .enumerate()
            .max_by_key(|&(i, &k)| (k, i))
            .expect("nonempty");
        counts[big] -= 1;
        counts[z] += 1;
    }
    counts.sort_unstable();
    StepSchedule::new(counts)
}

/// `ln p + T · g` for a given Gumbel variate `g`.
pub fn confidence_with_noise(p_sampled: f64, temperature: f64, g: f64) -> Result<f64> {
    if !(p_sampled > 0.0 && p_sampled <= 1.0) {
        return Err(invalid("p_sampled", format!("{p_sampled} not in (0, 1]")));
    }
    if !(temperature > 0.0) {
        return Err(Error::NonpositiveTemperature(temperature));
    }
    Ok(p_sampled.ln() + temperature * g)
}

/// Gumbel-perturbed confidence of a sampled token.
pub fn confidence(p_sampled: f64, temperature: f64, rng: &mut RngStream) -> Result<f64> {
    confidence_with_noise(p_sampled, temperature, gumbel_noise(rng))
}

/// Accepts the `k` masked cells with the highest confidence, copying their
/// tokens from `candidates`. Ties go to the earlier cell in row-major order.
/// Accepted cells are never revisited.
pub fn update_mask(
    conf: &Grid<f64>,
    candidates: &Grid<u32>,
    state: &MaskState,
    k: usize,
) -> Result<MaskState> {
    if conf.shape() != state.accepted.shape() || candidates.shape() != state.accepted.shape() {
        return Err(invalid("conf", "grid shape does not match the mask state"));
    }
    let mut open: Vec<usize> = (0..state.accepted.len())
        .filter(|&i| !state.accepted[i])
        .collect();
    if k > open.len() {
        return Err(invalid(
            "k",
            format!("{k} exceeds the {} remaining positions", open.len()),
        ));
    }
    if let Some(&i) = open.iter().find(|&&i| conf[i].is_nan()) {
        return Err(invalid("conf", format!("NaN confidence at cell {i}")));
    }
    open.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]).then(a.cmp(&b)));
    let mut next = state.clone();
    for &i in &open[..k] {
        next.accepted[i] = true;
        next.tokens[i] = candidates[i];
    }
    next.step += 1;
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct MaskOutput {
    pub tokens: Grid<u32>,
    /// Entropy of each cell at the step it was accepted.
    pub entropy: EntropyMap,
    /// Dynamic temperature of each cell at the step it was accepted.
    pub temperature: Grid<f64>,
    /// Step at which each cell was accepted.
    pub accepted_at: Grid<usize>,
    /// State after each step; the last entry is fully accepted.
    pub history: Vec<MaskState>,
    pub model_invocations: usize,
}

pub fn mask_generate<M: LogitsOracle + ?Sized>(
    model: &M,
    shape: (usize, usize),
    schedule: &StepSchedule,
    cfg: &SamplerConfig,
    rng: &RngStream,
) -> Result<MaskOutput> {
    cfg.validate()?;
    let (rows, cols) = shape;
    let n = rows * cols;
    if n == 0 {
        return Err(invalid("shape", "grid must be at least 1x1"));
    }
    if schedule.total_tokens() != n {
        return Err(invalid(
            "steps",
            format!(
                "schedule covers {} tokens, grid has {n}",
                schedule.total_tokens()
            ),
        ));
    }
    let mut sample_rng = rng.derive(SAMPLE_TAG);
    let mut gumbel_rng = rng.derive(GUMBEL_TAG);

    let mut state = MaskState::new(rows, cols, schedule.total_steps(), model.mask_token());
    let mut entropy = Grid::filled(rows, cols, 0.0);
    let mut temperature = Grid::filled(rows, cols, 0.0);
    let mut accepted_at = Grid::filled(rows, cols, 0);
    let mut history = Vec::with_capacity(schedule.total_steps());

    for (step, &k) in schedule.counts().iter().enumerate() {
        let mut conf = Grid::filled(rows, cols, f64::NEG_INFINITY);
        let mut candidates = state.tokens.clone();
        let mut step_entropy = Grid::filled(rows, cols, 0.0);
        let mut step_temp = Grid::filled(rows, cols, 0.0);
        for i in (0..n).filter(|&i| !state.accepted[i]) {
            let shaped = shaped_at(
                model,
                state.tokens.as_slice(),
                Site::from_linear(i, rows, cols),
                cfg,
            )?;
            let trace = shaped.sample(&mut sample_rng)?;
            candidates[i] = trace.token as u32;
            conf[i] = confidence(trace.probability, trace.temperature, &mut gumbel_rng)?;
            step_entropy[i] = trace.entropy;
            step_temp[i] = trace.temperature;
        }
        let next = update_mask(&conf, &candidates, &state, k)?;
        for i in (0..n).filter(|&i| next.accepted[i] && !state.accepted[i]) {
            entropy[i] = step_entropy[i];
            temperature[i] = step_temp[i];
            accepted_at[i] = step;
        }
        state = next;
        history.push(state.clone());
    }
    debug_assert!(state.is_complete());
    Ok(MaskOutput {
        tokens: state.tokens,
        entropy,
        temperature,
        accepted_at,
        history,
        model_invocations: schedule.total_steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: usize, cols: usize, v: Vec<f64>) -> Grid<f64> {
        Grid::from_vec(rows, cols, v).unwrap()
    }

    #[test]
    fn confidence_analytic_point() {
        let g0 = crate::dist::gumbel_from_uniform(1.0 / std::f64::consts::E);
        assert!(confidence_with_noise(1.0, 2.0, g0).unwrap().abs() < 1e-15);
        assert!(confidence_with_noise(0.0, 1.0, 0.0).is_err());
        assert!(confidence_with_noise(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn vanishing_temperature_ranks_by_probability() {
        let mut rng = RngStream::new(4, 0);
        let ps = [0.9, 0.5, 0.2, 0.05];
        let c: Vec<f64> = ps
            .iter()
            .map(|&p| confidence(p, 1e-9, &mut rng).unwrap())
            .collect();
        assert!(c.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn update_mask_top_two() {
        let state = MaskState::new(2, 2, 2, 99);
        let cand = Grid::from_vec(2, 2, vec![10, 11, 12, 13]).unwrap();
        let next = update_mask(&g(2, 2, vec![4.0, 3.0, 2.0, 1.0]), &cand, &state, 2).unwrap();
        assert_eq!(next.accepted.as_slice(), &[true, true, false, false]);
        assert_eq!(next.tokens.as_slice(), &[10, 11, 99, 99]);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn update_mask_ties_are_row_major() {
        let state = MaskState::new(2, 2, 4, 99);
        let cand = Grid::filled(2, 2, 1);
        let next = update_mask(&g(2, 2, vec![0.5; 4]), &cand, &state, 1).unwrap();
        assert_eq!(next.accepted.as_slice(), &[true, false, false, false]);
    }

    #[test]
    fn update_mask_skips_accepted_cells() {
        let state = MaskState::new(2, 2, 2, 99);
        let cand = Grid::from_vec(2, 2, vec![1, 2, 3, 4]).unwrap();
        let s1 = update_mask(&g(2, 2, vec![9.0, 0.0, 0.0, 0.0]), &cand, &state, 1).unwrap();
        // cell 0 still scores highest but is already accepted
        let cand2 = Grid::from_vec(2, 2, vec![7, 7, 7, 7]).unwrap();
        let s2 = update_mask(&g(2, 2, vec![9.0, 1.0, 2.0, 3.0]), &cand2, &s1, 3).unwrap();
        assert!(s2.is_complete());
        assert_eq!(s2.tokens.as_slice(), &[1, 7, 7, 7]);
        assert!(update_mask(&g(2, 2, vec![0.0; 4]), &cand2, &s1, 4).is_err());
    }

    #[test]
    fn cosine_schedule_small_cases() {
        assert_eq!(cosine_schedule(4, 4).unwrap().counts(), &[1, 1, 1, 1]);
        assert_eq!(cosine_schedule(10, 1).unwrap().counts(), &[10]);
        assert!(cosine_schedule(3, 4).is_err());
        assert!(cosine_schedule(3, 0).is_err());
    }

    #[test]
    fn cosine_schedule_conserves_and_grows() {
        for (n, t) in [
            (1024, 64),
            (256, 8),
            (256, 16),
            (256, 64),
            (256, 256),
            (17, 5),
        ] {
            let s = cosine_schedule(n, t).unwrap();
            assert_eq!(s.total_tokens(), n);
            assert_eq!(s.total_steps(), t);
            assert!(s.counts().iter().all(|&k| k >= 1));
            assert!(
                s.counts().windows(2).all(|w| w[0] <= w[1]),
                "{:?}",
                s.counts()
            );
        }
    }

    #[test]
    fn schedule_rejects_empty_steps() {
        assert!(StepSchedule::new(vec![]).is_err());
        assert!(StepSchedule::new(vec![2, 0]).is_err());
    }
}
