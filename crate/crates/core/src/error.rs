use thiserror::Error;

/// Errors raised by configuration validation, mapping and numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank {rank} out of range (must be < {limit})")]
    RankOutOfRange { rank: u128, limit: u128 },

    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("exhaustive ML search over 2^{p_total} hypotheses exceeds the guard of 2^{guard}")]
    MlGuard { p_total: usize, guard: usize },

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("i/o error on {path}: {detail}")]
    Io { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
