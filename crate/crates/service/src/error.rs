use serde::Serialize;
use thiserror::Error;

/// One reason a submission was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Offender {
    /// Output id, or `"*"` for problems spanning the whole list.
    pub output: String,
    pub field: String,
    pub detail: String,
}

impl std::fmt::Display for Offender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}: {}", self.output, self.field, self.detail)
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("dataset has no instances")]
    EmptyProject,

    #[error("project {0:?} already exists")]
    NameConflict(String),

    #[error("invalid project name {0:?}: use letters, digits, '-' and '_'")]
    InvalidName(String),

    #[error("project {0:?} not found")]
    ProjectNotFound(String),

    #[error("task {task} not found in project {project:?}")]
    TaskNotFound { project: String, task: usize },

    #[error("annotator {0:?} has not passed the tutorial")]
    NotQualified(String),

    #[error("invalid submission: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSubmission(Vec<Offender>),

    #[error("status cannot move from {from} back to {to}")]
    StatusRegression { from: String, to: String },

    #[error("project has no submissions to export")]
    EmptyExport,

    #[error("no tutorial gold ratings available")]
    NoGold,

    #[error(transparent)]
    Core(#[from] simpeval_core::Error),

    #[error("storage: {0}")]
    Io(#[from] std::io::Error),

    #[error("corrupt event log {path}: {detail}")]
    CorruptLog { path: String, detail: String },
}

impl ServiceError {
    /// Stable machine-readable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::EmptyProject => "empty-project",
            ServiceError::NameConflict(_) => "name-conflict",
            ServiceError::InvalidName(_) => "invalid-name",
            ServiceError::ProjectNotFound(_) | ServiceError::TaskNotFound { .. } => "not-found",
            ServiceError::NotQualified(_) => "not-qualified",
            ServiceError::InvalidSubmission(_) => "invalid-submission",
            ServiceError::StatusRegression { .. } => "status-regression",
            ServiceError::EmptyExport => "empty-export",
            ServiceError::NoGold => "no-gold",
            ServiceError::Core(e) if e.is_io() => "io",
            ServiceError::Core(_) => "invalid-data",
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } => "io",
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
