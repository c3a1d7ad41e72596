//! Runs one decode against the toy oracle and collects what the reports need.

use std::time::{Duration, Instant};

use entropix_core::{
    cosine_schedule, jacobi_decode, mask_generate, scale_generate, sequential_generate, EntropyMap,
    Grid, RngStream, SpecStats, ToyOracle,
};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub mode: Mode,
    pub seed: u64,
    pub vocab: usize,
    /// Output tokens, row-major.
    pub tokens: Grid<u32>,
    /// Entropy each output token was sampled under.
    pub entropy: EntropyMap,
    /// Applied temperature per output token.
    pub temperature: Grid<f64>,
    pub model_invocations: usize,
    pub tokens_emitted: usize,
    pub spec: Option<SpecStats>,
    /// Tokens accepted at each mask step.
    pub mask_counts: Option<Vec<usize>>,
    pub scale_mean_entropy: Option<Vec<f64>>,
    pub wall_time: Duration,
}

impl RunOutcome {
    pub fn mean_entropy(&self) -> f64 {
        mean(self.entropy.as_slice())
    }

    /// Sample variance of the per-token entropies.
    pub fn entropy_variance(&self) -> f64 {
        variance(self.entropy.as_slice())
    }

    pub fn mean_temperature(&self) -> f64 {
        mean(self.temperature.as_slice())
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        self.spec.as_ref().map(SpecStats::mean_acceptance_rate)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let oracle = ToyOracle::new(cfg.oracle()?)?;
    let sampler = cfg.sampler()?;
    let rng = RngStream::new(cfg.seed, 0);
    let shape = cfg.shape();
    let start = Instant::now();

    let mut out = match cfg.mode {
        Mode::NextToken => {
            let r = sequential_generate(&oracle, shape, &sampler, &rng)?;
            let temps = r.traces.iter().map(|t| t.temperature).collect();
            RunOutcome {
                mode: cfg.mode,
                seed: cfg.seed,
                vocab: cfg.vocab,
                tokens_emitted: r.tokens.len(),
                temperature: Grid::from_vec(shape.0, shape.1, temps)?,
                tokens: r.tokens,
                entropy: r.entropy,
                model_invocations: r.model_invocations,
                spec: None,
                mask_counts: None,
                scale_mean_entropy: None,
                wall_time: Duration::ZERO,
            }
        }
        Mode::Mask => {
            let schedule = cosine_schedule(shape.0 * shape.1, cfg.steps)?;
            let r = mask_generate(&oracle, shape, &schedule, &sampler, &rng)?;
            let counts = r
                .history
                .iter()
                .scan(0, |prev, st| {
                    let k = st.accepted_count() - *prev;
                    *prev = st.accepted_count();
                    Some(k)
                })
                .collect();
            RunOutcome {
                mode: cfg.mode,
                seed: cfg.seed,
                vocab: cfg.vocab,
                tokens_emitted: r.tokens.len(),
                tokens: r.tokens,
                entropy: r.entropy,
                temperature: r.temperature,
                model_invocations: r.model_invocations,
                spec: None,
                mask_counts: Some(counts),
                scale_mean_entropy: None,
                wall_time: Duration::ZERO,
            }
        }
        Mode::Scale => {
            let ladder = cfg.ladder()?;
            let r = scale_generate(&oracle, &ladder, &sampler, &cfg.scale_params()?, &rng)?;
            RunOutcome {
                mode: cfg.mode,
                seed: cfg.seed,
                vocab: cfg.vocab,
                tokens_emitted: r.grids.iter().map(Grid::len).sum(),
                tokens: r.final_grid().clone(),
                entropy: r.final_entropy().clone(),
                temperature: r.temperature.last().expect("ladder is nonempty").clone(),
                model_invocations: r.model_invocations,
                spec: None,
                mask_counts: None,
                scale_mean_entropy: Some(r.mean_entropy),
                wall_time: Duration::ZERO,
            }
        }
        Mode::SpecBaseline | Mode::SpecEntropy => {
            let length = cfg.length()?;
            let r = jacobi_decode(
                &oracle,
                shape,
                length,
                cfg.window,
                &sampler,
                &cfg.spec_params()?,
                &rng,
            )?;
            let rows = length / shape.1;
            RunOutcome {
                mode: cfg.mode,
                seed: cfg.seed,
                vocab: cfg.vocab,
                tokens_emitted: r.stats.tokens_emitted,
                entropy: r.entropy_map(shape.1)?,
                temperature: Grid::from_vec(rows, shape.1, r.temperature)?,
                tokens: Grid::from_vec(rows, shape.1, r.tokens)?,
                model_invocations: r.stats.model_invocations,
                spec: Some(r.stats),
                mask_counts: None,
                scale_mean_entropy: None,
                wall_time: Duration::ZERO,
            }
        }
    };
    out.wall_time = start.elapsed();
    Ok(out)
}
