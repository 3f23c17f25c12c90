use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n-gram order {0} is outside 1..=4")]
    InvalidNgramOrder(usize),

    #[error("compression ratio is undefined for an empty original")]
    UndefinedRatio,

    #[error("at least one reference is required")]
    MissingReferences,

    #[error("score is undefined: {0}")]
    UndefinedScore(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no embedding for text {0:?}")]
    MissingEmbedding(String),

    #[error("top-k of {k} requested but only {available} scores available")]
    TopKOutOfRange { k: usize, available: usize },

    #[error("training diverged (NaN loss) at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model version {0} (expected 1)")]
    UnsupportedModelVersion(u64),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("record {record}: invalid {field}: {detail}")]
    InvalidRecord { record: String, field: String, detail: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),

    #[error("annotator {0:?} has degenerate ratings (fewer than two or zero spread)")]
    DegenerateAnnotator(String),

    #[error("output {0:?} has no ratings")]
    MissingRatings(String),

    #[error("agreement is undefined: all pooled values are identical")]
    UndefinedAgreement,

    #[error("agreement needs at least two raters overlapping on one item")]
    InsufficientRaters,

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no comparable pairs survived filtering")]
    EmptyComparison,

    #[error("bootstrap statistic undefined on {failed} of {total} resamples")]
    UnstableBootstrap { failed: usize, total: usize },

    #[error("inconsistent alignment: {0}")]
    InconsistentAlignment(String),

    #[error("output text is empty")]
    EmptyOutput,

    #[error("input text has no words")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, message: impl ToString) -> Self {
        Error::Parse { line, message: message.to_string() }
    }

    pub(crate) fn record(record: &str, field: &str, detail: impl ToString) -> Self {
        Error::InvalidRecord {
            record: record.to_string(),
            field: field.to_string(),
            detail: detail.to_string(),
        }
    }

    /// True for filesystem failures, as opposed to validation failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
