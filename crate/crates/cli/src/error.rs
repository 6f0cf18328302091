use lore_core::LoreError;

/// CLI failures, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    /// Prefixes the message with the run that produced it.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Solver(m) => CliError::Solver(format!("{what}: {m}")),
        }
    }
}

impl From<LoreError> for CliError {
    fn from(e: LoreError) -> Self {
        let msg = e.to_string();
        match e {
            LoreError::InvalidConfig(_) => CliError::Config(msg),
            LoreError::SvdFailure { .. }
            | LoreError::NonFiniteObjective { .. }
            | LoreError::DegenerateEmbedding
            | LoreError::NonPositivePeak => CliError::Solver(msg),
            LoreError::IndexOutOfRange { .. }
            | LoreError::DegenerateTriplet { .. }
            | LoreError::InsufficientTriplets { .. }
            | LoreError::TestPoolExhausted { .. }
            | LoreError::EmptyTestSet
            | LoreError::ShapeMismatch(_)
            | LoreError::DataFormat { .. }
            | LoreError::Io(_) => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
