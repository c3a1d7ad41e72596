//! Entropy-informed sampling for discrete autoregressive token generation.
//!
//! The entropy of each position's predicted distribution drives:
//!
//! * a per-token dynamic temperature ([`temperature`]),
//! * Gumbel-perturbed confidence ordering in mask-prediction decoding
//!   ([`mask`]),
//! * a per-scale temperature decay in coarse-to-fine decoding ([`scale`]),
//! * an entropy-scaled acceptance threshold in self-speculative decoding
//!   ([`speculative`]).
//!
//! [`toy`] provides a deterministic synthetic model with a controllable
//! spatial entropy profile so each mode can be run and measured without a
//! trained network.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod grid;
pub mod mask;
pub mod oracle;
pub mod rng;
pub mod scale;
pub mod sequential;
pub mod speculative;
pub mod temperature;
pub mod toy;

pub use dist::{
    cfg_combine, entropy, gumbel_noise, rescale_logits, sample_categorical, softmax, top_k_filter,
    top_p_filter, TokenDistribution, EXCLUDED,
};
pub use error::{Error, Result};
pub use grid::{EntropyMap, Grid};
pub use mask::{cosine_schedule, mask_generate, update_mask, MaskOutput, MaskState, StepSchedule};
pub use oracle::{LogitsOracle, Site};
pub use rng::RngStream;
pub use scale::{scale_generate, scale_temperature, ScaleOutput, ScaleTempParams};
pub use sequential::{sequential_generate, SequentialOutput};
pub use speculative::{
    jacobi_decode, AcceptMode, JacobiOutput, NoiseDecay, SpecAcceptParams, SpecStats,
};
pub use temperature::{
    dynamic_temperature, preset, sample_entropy_aware, SampleTrace, SamplerConfig, TempParams,
};
pub use toy::{profile_rect, OracleConfig, Rect, ToyOracle};
