use abc_core::AbcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Sampler(#[from] AbcError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("malformed population file {path}: {message}")]
    PopulationFile { path: String, message: String },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration or validation problems, 3 when sampling stopped
    /// early (budget or particle collapse), 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sampler(e) => match e {
                AbcError::InvalidConfig(_)
                | AbcError::UnknownModel(_)
                | AbcError::DimensionMismatch { .. } => 2,
                AbcError::BudgetExhausted { .. }
                | AbcError::DegeneratePopulation(_)
                | AbcError::SupportUnreachable(_) => 3,
                AbcError::UnnormalizedWeights { .. } | AbcError::InvalidSummary(_) => 1,
            },
            CliError::Io { .. } | CliError::PopulationFile { .. } => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
