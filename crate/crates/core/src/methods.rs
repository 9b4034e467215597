//! The four classifiers behind one interface, for cross-validation and the scheme grid.

use std::fmt;
use std::str::FromStr;

use crate::blogit::{fit_map, predict_prob, LogitFit, LogitModel};
use crate::cohort::FeatureView;
use crate::dtree::{fit_tree, DecisionTree, TreeConfig};
use crate::eval::{Fitter, Scorer};
use crate::msearch::{
    bma_average, bma_predict, forward_select_with, ModelAverage, SelectConfig, SelectionTrace, VisitedModel, Weighting,
};
use crate::rforest::{fit_forest, ForestConfig, RandomForest};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Dt,
    Rf,
    Logit,
    Bma,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dt, Method::Rf, Method::Logit, Method::Bma];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dt => "dt",
            Method::Rf => "rf",
            Method::Logit => "logit",
            Method::Bma => "bma",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected dt, rf, logit or bma)"))
    }
}

/// Where variable selection for LOGIT and BMA happens during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    /// Select inside every training fold.
    #[default]
    PerFold,
    /// Select once on all rows, then refit the chosen feature sets in each fold.
    FullData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub select: SelectConfig,
    pub weighting: Weighting,
    pub selection: SelectionMode,
    /// Number of top-importance features reported as selected by RF.
    pub rf_top_k: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            select: SelectConfig::default(),
            weighting: Weighting::default(),
            selection: SelectionMode::default(),
            rf_top_k: 5,
        }
    }
}

/// A fitted classifier of any of the four kinds.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Tree(DecisionTree),
    Forest(RandomForest),
    Logit { fit: LogitFit, columns: Vec<usize>, trace: Option<SelectionTrace> },
    Bma { average: ModelAverage, trace: Option<SelectionTrace> },
}

impl FittedModel {
    /// The variables this model reports as selected, in view column order.
    pub fn selected_variables(&self, feature_names: &[String], rf_top_k: usize) -> Vec<String> {
        match self {
            FittedModel::Tree(t) => t.used_features().into_iter().map(|i| feature_names[i].clone()).collect(),
            FittedModel::Forest(f) => {
                let top = f.top_features(rf_top_k);
                feature_names.iter().filter(|n| top.contains(n)).cloned().collect()
            }
            FittedModel::Logit { fit, .. } => fit.feature_names.clone(),
            FittedModel::Bma { average, .. } => average
                .inclusion_probabilities(feature_names)
                .into_iter()
                .filter(|(_, p)| *p >= 0.5)
                .map(|(n, _)| n)
                .collect(),
        }
    }
}

impl Scorer for FittedModel {
    fn score(&self, row: &[f64]) -> Result<f64, Error> {
        Ok(match self {
            FittedModel::Tree(t) => t.predict(row)?.prob_fall,
            FittedModel::Forest(f) => f.predict(row)?.prob_fall,
            FittedModel::Logit { fit, columns, .. } => {
                let projected: Vec<f64> = columns.iter().map(|&c| row[c]).collect();
                predict_prob(fit, &projected)?
            }
            FittedModel::Bma { average, .. } => bma_predict(average, row)?,
        })
    }
}

fn columns_of(view: &FeatureView, names: &[String]) -> Vec<usize> {
    names.iter().map(|n| view.column_index(n).expect("selected feature comes from the view")).collect()
}

fn refit(view: &FeatureView, features: &[String], config: &MethodConfig) -> Result<LogitFit, Error> {
    let model = LogitModel::new(features.to_vec(), config.select.prior_variance).with_evidence(config.select.evidence);
    let fit = fit_map(view, &model)?;
    fit.ensure_converged()?;
    Ok(fit)
}

/// Fits `method` to every row of `view`, running variable selection where it applies.
pub fn fit_method(method: Method, view: &FeatureView, config: &MethodConfig, seed: u64) -> Result<FittedModel, Error> {
    Ok(match method {
        Method::Dt => FittedModel::Tree(fit_tree(view, &config.tree, None)?),
        Method::Rf => FittedModel::Forest(fit_forest(view, &config.forest, seed)?),
        Method::Logit => {
            let trace = forward_select_with(view, &config.select)?;
            let fit = trace.preferred().fit.clone();
            FittedModel::Logit { columns: columns_of(view, &trace.preferred_model), fit, trace: Some(trace) }
        }
        Method::Bma => {
            let trace = forward_select_with(view, &config.select)?;
            let average = bma_average(&trace, view, config.weighting)?;
            FittedModel::Bma { average, trace: Some(trace) }
        }
    })
}

/// Refits the feature sets of a full-data model on `view` without reselecting.
fn refit_frozen(frozen: &FittedModel, view: &FeatureView, config: &MethodConfig) -> Result<FittedModel, Error> {
    Ok(match frozen {
        FittedModel::Logit { fit, .. } => {
            let fit = refit(view, &fit.feature_names, config)?;
            FittedModel::Logit { columns: columns_of(view, &fit.feature_names), fit, trace: None }
        }
        FittedModel::Bma { average, .. } => {
            let visited = average
                .members
                .iter()
                .map(|m| Ok(VisitedModel { features: m.features.clone(), fit: refit(view, &m.features, config)? }))
                .collect::<Result<Vec<_>, Error>>()?;
            let trace =
                SelectionTrace { steps: Vec::new(), visited_models: visited, preferred_model: Vec::new(), skipped: 0 };
            FittedModel::Bma { average: bma_average(&trace, view, config.weighting)?, trace: None }
        }
        other => other.clone(),
    })
}

/// [`Fitter`] for one method. With a frozen full-data model, LOGIT and BMA refit its
/// feature sets in each fold instead of selecting again.
pub struct MethodFitter<'a> {
    pub method: Method,
    pub config: &'a MethodConfig,
    pub frozen: Option<&'a FittedModel>,
}

impl Fitter for MethodFitter<'_> {
    fn fit(&self, train: &FeatureView, seed: u64) -> Result<Box<dyn Scorer>, Error> {
        let model = match self.frozen {
            Some(frozen) if matches!(self.method, Method::Logit | Method::Bma) => {
                refit_frozen(frozen, train, self.config)?
            }
            _ => fit_method(self.method, train, self.config, seed)?,
        };
        Ok(Box::new(model))
    }
}
