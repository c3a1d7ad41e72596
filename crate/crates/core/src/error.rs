use thiserror::Error;

/// Errors raised by distribution operations and the decoders built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty support: every logit is excluded")]
    EmptySupport,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid logits: {0}")]
    InvalidLogits(String),
    #[error("nonpositive temperature: {0}")]
    NonpositiveTemperature(f64),
    #[error("negative entropy: {0}")]
    NegativeEntropy(f64),
    #[error("vocabulary size mismatch: {left} vs {right}")]
    VocabMismatch { left: usize, right: usize },
    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("position {0} out of range")]
    OutOfRange(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
