//! Forward variable selection by log marginal likelihood and model averaging over the
//! visited models.

mod bma;
mod select;
mod suite;

use thiserror::Error;

use crate::blogit::LogitError;

pub use bma::{bma_average, bma_predict, weights_from_lml, write_membership_csv, BmaMember, ModelAverage, Weighting};
pub use select::{forward_select, forward_select_with, SelectConfig, SelectionStep, SelectionTrace, VisitedModel};
pub use suite::{
    cross_validate, run_scheme_suite, write_grid_csv, write_selected_csv, CellOutcome, CellResult, SuiteConfig,
    SuiteReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("lml-ratio weights are undefined: weight {weight} for model {model} is negative")]
    NegativeWeight { model: usize, weight: f64 },
    #[error("lml-ratio weights are undefined: lml values sum to zero")]
    ZeroTotal,
    #[error("a model average needs at least one member")]
    EmptyAverage,
    #[error("row has {got} values, average expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature {0:?} is not in the view")]
    UnknownFeature(String),
    #[error("weights must be finite, non-negative and sum to one")]
    InvalidWeights,
    #[error(transparent)]
    Logit(#[from] LogitError),
}
