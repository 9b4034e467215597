//! Falls classification from rating-scale item scores.
//!
//! The crate covers the whole analysis: cohort ingestion and synthesis ([`cohort`]),
//! decision trees ([`dtree`]), random forests ([`rforest`]), Bayesian logistic regression
//! ([`blogit`]), forward selection and model averaging ([`msearch`]), and leave-one-out
//! evaluation with ROC analysis and descriptive tests ([`eval`]).

pub mod blogit;
pub mod cohort;
pub mod dtree;
mod error;
pub mod eval;
pub mod methods;
pub mod msearch;
pub mod rforest;
pub mod rng;

pub use blogit::{fit_map, laplace_lml, odds_ratios, predict_prob, EvidenceApprox, LogitFit, LogitModel};
pub use cohort::{build_view, CohortDataset, FeatureView, Horizon, ItemSchema, Scenario, Scheme};
pub use dtree::{best_split, fit_tree, DecisionTree, SplitCriterion, TreeConfig};
pub use error::Error;
pub use eval::{evaluate, loocv_scores, EvaluationReport, ScoredRow, ThresholdRule};
pub use methods::{fit_method, FittedModel, Method, MethodConfig, SelectionMode};
pub use msearch::{
    bma_average, bma_predict, cross_validate, forward_select, run_scheme_suite, SuiteConfig, SuiteReport, Weighting,
};
pub use rforest::{fit_forest, ForestConfig, RandomForest};
