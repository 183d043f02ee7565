use thiserror::Error;

use crate::solver::SolveStatus;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum DroError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("dataset is empty after filtering")]
    EmptyDataset,

    #[error("non-numeric token `{token}` in numeric column `{column}` (row {row})")]
    NonNumeric {
        column: String,
        row: usize,
        token: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("category index {index} out of range for feature with {cardinality} categories")]
    CategoryOutOfRange { index: usize, cardinality: usize },

    #[error("enumeration cap exceeded: |C| = {size} > {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("solver returned {status:?}{context}")]
    Solver {
        status: SolveStatus,
        context: String,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{task}: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<DroError>,
    },
}

impl DroError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DroError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Attach extra context to a solver failure; other variants pass through.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            DroError::Solver { status, context } => DroError::Solver {
                status,
                context: format!("{context} ({})", ctx.into()),
            },
            other => other,
        }
    }

    /// Wrap the error with the name of the task that produced it.
    pub fn in_task(self, task: impl Into<String>) -> Self {
        DroError::Task {
            task: task.into(),
            source: Box::new(self),
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        match self {
            DroError::Solver { .. } => true,
            DroError::Task { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, DroError>;
