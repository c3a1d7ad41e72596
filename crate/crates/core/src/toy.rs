//! Deterministic synthetic logits oracle with a controllable entropy map.
//!
//! Every site has a preferred token picked by hashing `(seed, site)`. Its
//! logit is lifted by `30 · κ` above a pseudo-random pattern, where
//! `κ ∈ [0, 1]` is the site's concentration from the profile map: `κ = 0`
//! gives a near-uniform distribution, `κ = 1` a near-deterministic one.
//! The pattern blends a fixed per-site component with one keyed by a hash of
//! the conditioning tokens, `(1 − s) · base + s · ctx` for
//! `s = context_sensitivity`, scaled to `[0, BASE_SPREAD)`.
//!
//! Context hash: `h₀ = 0`, then for each non-mask token `t` at index `i`,
//! `h ← mix_pair(h, mix_pair(i, t))`, with [`mix_pair`] built on the
//! SplitMix64 finalizer.

use crate::dist::TokenDistribution;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::oracle::{LogitsOracle, Site};
use crate::rng::{mix64, mix_pair};

/// Logit gap at full concentration.
pub const MAX_GAP: f64 = 30.0;
/// Amplitude of the pattern under the preferred-token gap.
pub const BASE_SPREAD: f64 = 1.5;
/// Share of the gap kept by the unconditional branch.
pub const UNCOND_GAP_SHARE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub vocab: usize,
    /// Concentration map κ; its shape is the output grid.
    pub profile: Grid<f64>,
    pub seed: u64,
    pub context_sensitivity: f64,
}

impl OracleConfig {
    /// 64-token codebook on a 16×16 grid with the given profile.
    pub fn new(profile: Grid<f64>, seed: u64) -> Self {
        Self {
            vocab: 64,
            profile,
            seed,
            context_sensitivity: 1.0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.profile.shape()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab < 2 {
            return Err(invalid("vocab", format!("{} < 2", self.vocab)));
        }
        if self.vocab >= u32::MAX as usize {
            return Err(invalid("vocab", "too large"));
        }
        if self.profile.is_empty() {
            return Err(invalid("shape", "grid must be at least 1x1"));
        }
        if let Some(k) = self
            .profile
            .as_slice()
            .iter()
            .find(|k| !(0.0..=1.0).contains(*k))
        {
            return Err(invalid("kappa", format!("{k} not in [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.context_sensitivity) {
            return Err(invalid(
                "context_sensitivity",
                format!("{} not in [0, 1]", self.context_sensitivity),
            ));
        }
        Ok(())
    }
}

/// Half-open rectangle `top..top+height` × `left..left+width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..self.top + self.height).contains(&row)
            && (self.left..self.left + self.width).contains(&col)
    }

    /// The `height × width` rectangle centred in a `rows × cols` grid.
    pub fn centered(rows: usize, cols: usize, height: usize, width: usize) -> Self {
        Self {
            top: rows.saturating_sub(height) / 2,
            left: cols.saturating_sub(width) / 2,
            height,
            width,
        }
    }
}

/// Background κ everywhere except `rect`, which gets the foreground κ.
pub fn profile_rect(
    shape: (usize, usize),
    background_kappa: f64,
    foreground_kappa: f64,
    rect: Rect,
) -> Result<Grid<f64>> {
    let (rows, cols) = shape;
    for k in [background_kappa, foreground_kappa] {
        if !(0.0..=1.0).contains(&k) {
            return Err(invalid("kappa", format!("{k} not in [0, 1]")));
        }
    }
    if rect.top + rect.height > rows || rect.left + rect.width > cols {
        return Err(Error::OutOfRange(format!(
            "rect {rect:?} outside {rows}x{cols}"
        )));
    }
    let mut g = Grid::filled(rows, cols, background_kappa);
    for r in 0..rows {
        for c in 0..cols {
            if rect.contains(r, c) {
                g.set(r, c, foreground_kappa);
            }
        }
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct ToyOracle {
    cfg: OracleConfig,
}

const SITE_SALT: u64 = 0x5349_5445;
const BASE_SALT: u64 = 0x4241_5345;
const CONTEXT_SALT: u64 = 0x4354_5854;

/// Maps a hash to `[0, 1)`.
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl ToyOracle {
    pub fn new(cfg: OracleConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    pub fn shape(&self) -> (usize, usize) {
        self.cfg.shape()
    }

    /// Convenience query on the output grid.
    pub fn logits_at(&self, context: &[u32], row: usize, col: usize) -> Result<TokenDistribution> {
        let (rows, cols) = self.shape();
        self.logits(context, Site::new(row, col, rows, cols))
    }

    /// κ at a site, block-averaged when the site's grid is coarser than the
    /// profile.
    pub fn kappa(&self, site: Site) -> f64 {
        let (pr, pc) = self.cfg.profile.shape();
        let span = |i: usize, n: usize, p: usize| {
            let lo = i * p / n;
            let hi = ((i + 1) * p).div_ceil(n).clamp(lo + 1, p);
            lo..hi
        };
        let (rs, cs) = (span(site.row, site.rows, pr), span(site.col, site.cols, pc));
        let mut total = 0.0;
        let mut n = 0usize;
        for r in rs {
            for c in cs.clone() {
                total += *self.cfg.profile.get(r, c);
                n += 1;
            }
        }
        total / n as f64
    }

    fn site_key(&self, site: Site) -> u64 {
        let shape = mix_pair(site.rows as u64, site.cols as u64);
        mix_pair(
            mix_pair(self.cfg.seed, SITE_SALT),
            mix_pair(shape, site.linear() as u64),
        )
    }

    /// Preferred token of a site.
    pub fn preferred(&self, site: Site) -> u32 {
        (mix64(self.site_key(site)) % self.cfg.vocab as u64) as u32
    }

    fn context_hash(&self, context: &[u32]) -> u64 {
        let mask = self.mask_token();
        context
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != mask)
            .fold(0u64, |h, (i, &t)| mix_pair(h, mix_pair(i as u64, t as u64)))
    }

    fn check(&self, context: &[u32], site: Site) -> Result<()> {
        if !site.in_bounds() || site.rows == 0 || site.cols == 0 {
            return Err(Error::OutOfRange(format!("{site:?}")));
        }
        let mask = self.mask_token();
        if let Some(t) = context.iter().find(|&&t| t > mask) {
            return Err(Error::OutOfRange(format!("context token {t}")));
        }
        Ok(())
    }

    fn build(&self, context: &[u32], site: Site, gap_share: f64, with_context: bool) -> Vec<f64> {
        let key = self.site_key(site);
        let base_key = mix_pair(key, BASE_SALT);
        let gap = MAX_GAP * self.kappa(site) * gap_share;
        let preferred = self.preferred(site) as usize;
        let sens = if with_context {
            self.cfg.context_sensitivity
        } else {
            0.0
        };
        let ctx_key = if sens > 0.0 {
            mix_pair(mix_pair(key, CONTEXT_SALT), self.context_hash(context))
        } else {
            0
        };
        (0..self.cfg.vocab)
            .map(|v| {
                let mut x = (1.0 - sens) * unit(mix_pair(base_key, v as u64));
                if sens > 0.0 {
                    x += sens * unit(mix_pair(ctx_key, v as u64));
                }
                x *= BASE_SPREAD;
                if v == preferred {
                    x += gap;
                }
                x
            })
            .collect()
    }
}

impl LogitsOracle for ToyOracle {
    fn vocab_size(&self) -> usize {
        self.cfg.vocab
    }

    fn logits(&self, context: &[u32], site: Site) -> Result<TokenDistribution> {
        self.check(context, site)?;
        TokenDistribution::new(self.build(context, site, 1.0, true))
    }

    /// Same base pattern with half the gap and no context term.
    fn uncond_logits(&self, context: &[u32], site: Site) -> Result<Option<TokenDistribution>> {
        self.check(context, site)?;
        TokenDistribution::new(self.build(context, site, UNCOND_GAP_SHARE, false)).map(Some)
    }
}
