use thiserror::Error;

/// Errors raised anywhere in the embedding pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoreError {
    #[error("triplet {position} references an item outside [0, {n_items})")]
    IndexOutOfRange { position: usize, n_items: usize },

    #[error("triplet {position} repeats an item index")]
    DegenerateTriplet { position: usize },

    #[error("SVD did not converge on a {rows}x{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("fold {fold} has an empty training partition")]
    InsufficientTriplets { fold: usize },

    #[error("test pool exhausted: requested {requested} unseen queries, {available} available")]
    TestPoolExhausted { requested: usize, available: usize },

    #[error("accuracy requested on an empty triplet set")]
    EmptyTestSet,

    #[error("centered embedding has (near) zero norm")]
    DegenerateEmbedding,

    #[error("aligned embedding has no positive entry; PSNR peak is undefined")]
    NonPositivePeak,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("data format error at line {line}: {message}")]
    DataFormat { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LoreError {
    fn from(e: std::io::Error) -> Self {
        LoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LoreError>;
