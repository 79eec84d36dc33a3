//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile row count mismatch: expected {expected} data rows, found {found}")]
    RowCount { expected: usize, found: usize },

    #[error("row {row}: {message}")]
    BadValue { row: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("generation dataset is empty")]
    EmptyDataset,

    #[error("scenario set is invalid: {0}")]
    InvalidScenarioSet(String),

    #[error("scenario reduction target {target} out of range for {available} scenarios")]
    BadReductionTarget { target: usize, available: usize },

    #[error("LP is malformed: {0}")]
    MalformedLp(String),

    #[error("solver backend failure: {0}")]
    Backend(String),

    #[error("LP infeasible{}", context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Infeasible { context: Option<String> },

    #[error("LP unbounded")]
    Unbounded,

    #[error("solve did not reach optimality: {0}")]
    NonOptimal(String),

    #[error("scenario {index}: {source}")]
    ScenarioSolve { index: usize, source: Box<Error> },

    #[error("technology subset {{{subset}}}: {source}")]
    SubsetSolve { subset: String, source: Box<Error> },

    #[error("design violates capital budget in scenario {scenario}: {spent:.6} > {budget:.6} EUR/yr")]
    BudgetViolated { scenario: usize, spent: f64, budget: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("measurement sample streams differ: {0}")]
    SeedMismatch(String),

    #[error("too many per-sample failures: {failed} of {total}; first: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    /// True for outcomes that mean "the model has no feasible design",
    /// as opposed to internal failures.
    pub fn is_infeasibility(&self) -> bool {
        match self {
            Error::Infeasible { .. } | Error::BudgetViolated { .. } => true,
            Error::ScenarioSolve { source, .. } | Error::SubsetSolve { source, .. } => {
                source.is_infeasibility()
            }
            _ => false,
        }
    }
}
