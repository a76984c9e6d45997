use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("beam {beam} attracted {count} candidate user(s); every selected beam needs at least 2")]
    BeamUnderfilled { beam: usize, count: usize },

    #[error("effective channel matrix is ill conditioned (condition estimate {cond:.3e})")]
    DegenerateChannel { cond: f64 },

    #[error("minimum-rate floor cannot be met within the power budget")]
    Infeasible,

    #[error("expansion point for the bilinear upper bound must be positive (t={t:.3e}, q={q:.3e})")]
    NonPositiveExpansion { t: f64, q: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
