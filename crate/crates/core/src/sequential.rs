//! Plain next-token decoding in raster order.

use crate::error::{invalid, Result};
use crate::grid::{EntropyMap, Grid};
use crate::oracle::{shaped_at, LogitsOracle, Site};
use crate::rng::RngStream;
use crate::temperature::{SampleTrace, SamplerConfig};

const EMIT_TAG: u64 = 0x454d_4954;

/// The stream that draws the emitted token at `position`.
///
/// Sequential and speculative decoding share it, so a speculative run with a
/// one-token window reproduces sequential output exactly.
pub fn emission_stream(base: &RngStream, position: usize) -> RngStream {
    base.derive(EMIT_TAG).derive(position as u64)
}

#[derive(Clone, Debug)]
pub struct SequentialOutput {
    pub tokens: Grid<u32>,
    pub entropy: EntropyMap,
    pub traces: Vec<SampleTrace>,
    pub model_invocations: usize,
}

/// Samples every cell of a `rows × cols` grid one at a time, each
/// conditioned on all earlier cells.
pub fn sequential_generate<M: LogitsOracle + ?Sized>(
    model: &M,
    shape: (usize, usize),
    cfg: &SamplerConfig,
    rng: &RngStream,
) -> Result<SequentialOutput> {
    cfg.validate()?;
    let (rows, cols) = shape;
    if rows == 0 || cols == 0 {
        return Err(invalid("shape", "grid must be at least 1x1"));
    }
    let n = rows * cols;
    let mut prefix: Vec<u32> = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    for i in 0..n {
        let shaped = shaped_at(model, &prefix, Site::from_linear(i, rows, cols), cfg)?;
        let trace = shaped.sample(&mut emission_stream(rng, i))?.at_step(i);
        prefix.push(trace.token as u32);
        traces.push(trace);
    }
    Ok(SequentialOutput {
        tokens: Grid::from_vec(rows, cols, prefix)?,
        entropy: Grid::from_vec(rows, cols, traces.iter().map(|t| t.entropy).collect())?,
        traces,
        model_invocations: n,
    })
}
