//! Meta-evaluation: rating normalization, annotator agreement, metric-human
//! correlation and bootstrap intervals.

mod agreement;
mod bootstrap;
mod correlation;
mod ratings;
mod scores;

pub use agreement::{krippendorff_alpha, AgreementReport};
pub use bootstrap::{bootstrap_ci, kendall_with_ci, percentile, BootstrapConfig};
pub use correlation::{
    judge_pairs, kendall_tau_like, pearson, sentence_groups, tau, CorrelationReport, JudgedOutput, PairJudgment,
    PairStatus, SentenceGroup,
};
pub use ratings::{aggregate, aggregate_outputs, zscore_normalize, RatingRow, RatingTable};
pub use scores::{ingest_metric_scores, parse_metric_scores, write_metric_scores, ScoreLine};

/// Default minimum gap, in raw rating points, for a pair to be compared.
pub const DEFAULT_THRESHOLD: f64 = 5.0;
