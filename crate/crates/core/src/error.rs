use thiserror::Error;

/// Errors raised by the duel engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DuelError {
    #[error("time {0} is outside [0, 1]")]
    Domain(f64),

    #[error("invalid accuracy profile: {0}")]
    InvalidProfile(String),

    #[error("invalid duel spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("action times out of order: {0}")]
    Ordering(String),

    #[error("no sign change at state ({mu}, {nu}): G(0) = {g_lo}, G({upper}) = {g_hi}")]
    NoSignChange {
        mu: usize,
        nu: usize,
        upper: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("inconsistent values at state ({mu}, {nu}): {detail}")]
    Inconsistent { mu: usize, nu: usize, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, DuelError>;
