use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hilbert-space dimension {dim} exceeds the limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("state component {0} lies outside the truncated space")]
    Truncation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("steady state is not unique: null space of dimension {dimension}")]
    DegenerateNullSpace { dimension: usize },

    #[error("steady-state solve failed: {0}")]
    Singular(String),

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("rate graph is reducible: {closed_classes} closed classes")]
    Reducible { closed_classes: usize },

    #[error("near-degenerate effective levels (gap {gap:.3e})")]
    Degenerate { gap: f64 },

    #[error("cell (delta = {delta}, omega_d = {omega_d}): {source}")]
    Cell { delta: f64, omega_d: f64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
