use thiserror::Error;

/// Errors raised by the samplers and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbcError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weights are not normalized (sum = {sum})")]
    UnnormalizedWeights { sum: f64 },

    #[error("degenerate population: {0}")]
    DegeneratePopulation(String),

    #[error(
        "simulation budget exhausted after {sims_used} calls: accepted {accepted} of {needed} particles"
    )]
    BudgetExhausted {
        accepted: usize,
        needed: usize,
        sims_used: u64,
    },

    #[error("simulator returned invalid summaries: {0}")]
    InvalidSummary(String),

    #[error("no proposal inside the prior support after {0} redraws")]
    SupportUnreachable(u64),

    #[error("unknown model identifier `{0}`")]
    UnknownModel(String),
}

pub type Result<T, E = AbcError> = std::result::Result<T, E>;
