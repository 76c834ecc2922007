use thiserror::Error;

/// Errors reported by the numerical layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent bundle: {0}")]
    InvalidBundle(String),

    #[error("invalid exponent field: {0}")]
    InvalidExponent(String),

    #[error("non-finite integrand at pair ({i}, {j})")]
    NonFiniteIntegrand { i: usize, j: usize },

    #[error("value out of representable range at node {node}: {detail}")]
    OutOfRange { node: usize, detail: String },

    #[error("luxemburg bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("exponent misconfiguration: {0}")]
    ExponentMisconfiguration(String),

    #[error("mountain-pass geometry not verified: {0}")]
    MountainPassGeometry(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid grid function: {0}")]
    InvalidGridFunction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
