use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Probability mass that would fall outside the truncated Fock space.
    #[error("truncation error: tail mass {tail:.3e} beyond cutoff {cutoff} exceeds {tolerance:.1e}")]
    Truncation {
        cutoff: usize,
        tail: f64,
        tolerance: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate post-selection: heralding probability {probability:.3e}")]
    DegeneratePostselection { probability: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("evaluation budget exceeded: {requested} evaluations requested, budget is {budget}")]
    Budget { requested: u64, budget: u64 },

    #[error("closed-form/numeric convention mismatch: max |difference| = {max_diff:.3e}")]
    ConventionMismatch { max_diff: f64 },

    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
