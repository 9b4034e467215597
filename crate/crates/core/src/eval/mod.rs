//! Leave-one-out evaluation, confusion metrics, ROC analysis and cohort description.

mod describe;
mod loocv;
mod metrics;
mod report;
pub mod stats;

use thiserror::Error;

pub use describe::{describe_cohort, write_describe_csv, CohortSummary, DescribeCell, DescribeRow};
pub use loocv::{loocv_scores, Fitter, Scorer};
pub use metrics::{
    auc_concordance, auc_trapezoid, candidate_thresholds, choose_threshold, confusion_at, fmt_metric, roc_and_auc,
    ConfusionCounts, Metrics, Ratio, RocCurve, RocPoint, ScoredRow, ThresholdRule,
};
pub use report::{evaluate, write_metrics_csv, write_report_csv, write_roc_csv, EvaluationReport, ParticipantResult};
pub use stats::{chi_square_2x2, mann_whitney, mann_whitney_with, ChiSquare, MannWhitney, MwuMethod, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("both fallers and non-fallers are required")]
    SingleClass,
    #[error("score for {0} is not finite")]
    NonFiniteScore(String),
    #[error("cross-validation needs at least 2 rows, got {0}")]
    TooFewRows(usize),
}
