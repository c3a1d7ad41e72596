//! The model interface the decoders drive.

use crate::dist::TokenDistribution;
use crate::error::Result;
use crate::temperature::{shape_distribution_with, SamplerConfig, ShapedDistribution};

/// Cell `(row, col)` of a `rows × cols` token grid.
///
/// Scale-wise decoding queries grids coarser than the output; every other
/// mode queries the output grid itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Site {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Site {
    pub fn new(row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self {
            row,
            col,
            rows,
            cols,
        }
    }

    /// Site of linear index `i` in a row-major `rows × cols` grid.
    pub fn from_linear(i: usize, rows: usize, cols: usize) -> Self {
        Self::new(i / cols, i % cols, rows, cols)
    }

    pub fn linear(&self) -> usize {
        self.row * self.cols + self.col
    }

    pub fn in_bounds(&self) -> bool {
        self.row < self.rows && self.col < self.cols
    }
}

/// A source of next-token logits.
///
/// `context` carries whatever conditioning the decoding mode has: the
/// committed prefix (next-token and speculative modes), the whole grid with
/// unfilled cells set to [`LogitsOracle::mask_token`] (mask-prediction), or
/// all coarser scales concatenated (scale-wise). A single decoding step that
/// queries many sites counts as one model invocation.
pub trait LogitsOracle {
    fn vocab_size(&self) -> usize;

    /// Reserved id marking an unfilled context slot. Never emitted.
    fn mask_token(&self) -> u32 {
        self.vocab_size() as u32
    }

    fn logits(&self, context: &[u32], site: Site) -> Result<TokenDistribution>;

    /// Unconditional branch for classifier-free guidance, if the model has one.
    fn uncond_logits(&self, _context: &[u32], _site: Site) -> Result<Option<TokenDistribution>> {
        Ok(None)
    }
}

/// Queries `model` at `site` and runs the entropy-aware pipeline, pulling
/// the unconditional branch only when guidance is active.
pub fn shaped_at<M: LogitsOracle + ?Sized>(
    model: &M,
    context: &[u32],
    site: Site,
    cfg: &SamplerConfig,
) -> Result<ShapedDistribution> {
    shaped_at_with(model, context, site, cfg, Ok)
}

pub fn shaped_at_with<M: LogitsOracle + ?Sized>(
    model: &M,
    context: &[u32],
    site: Site,
    cfg: &SamplerConfig,
    adjust: impl FnOnce(f64) -> Result<f64>,
) -> Result<ShapedDistribution> {
    let cond = model.logits(context, site)?;
    let uncond = if cfg.cfg_scale != 1.0 {
        model.uncond_logits(context, site)?
    } else {
        None
    };
    shape_distribution_with(&cond, uncond.as_ref(), cfg, adjust)
}
