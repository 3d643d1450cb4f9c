use thiserror::Error;

/// Errors raised by input validation and the samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("setting must be a unit vector, got squared norm {norm_sq}")]
    NonUnitSetting { norm_sq: f64 },

    #[error("state vector must be normalized, got squared norm {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("non-finite component in {what}")]
    NonFinite { what: &'static str },

    #[error("hidden-variable coordinate must lie in [0, 1), got {tau}")]
    TauOutOfRange { tau: f64 },

    #[error("states coincide as rays; a ray-distinct pair is required")]
    RayEqualStates,

    #[error("{which} must not be empty")]
    EmptyMenu { which: &'static str },

    #[error("prior over {which} is invalid: {reason}")]
    InvalidPrior { which: &'static str, reason: String },

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("rejection sampler exceeded {cap} iterations; check the reference state")]
    RejectionCapExceeded { cap: u64 },

    #[error("probability table is invalid: {reason}")]
    InvalidTable { reason: String },

    #[error("unknown variable {name}")]
    UnknownVariable { name: String },

    #[error("conditioning event has zero probability everywhere: {detail}")]
    EmptyConditional { detail: String },
}
