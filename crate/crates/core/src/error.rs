use thiserror::Error;

/// Errors raised by the numerical building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ellipticity violation: diffusion coefficient {value} at x = {x} is below {floor}")]
    EllipticityViolation { x: f64, value: f64, floor: f64 },

    #[error("invalid modulus: h({r}) = {value} is not positive")]
    InvalidModulus { r: f64, value: f64 },

    #[error("modulus fails the Osgood condition (classified {0})")]
    OsgoodFailure(String),

    #[error("level construction failed at n = {level}: {reason}")]
    LevelConstructionFailure { level: usize, reason: String },

    #[error("insufficient sample: {available} usable paths, need at least {required}")]
    InsufficientSample { available: usize, required: usize },

    #[error("state blew up (non-finite value) at step {step}")]
    BlowUp { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
