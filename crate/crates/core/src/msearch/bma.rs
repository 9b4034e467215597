use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::{SelectError, SelectionTrace};
use crate::blogit::{predict_prob, LogitFit};
use crate::cohort::FeatureView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `w_m = exp(lml_m - max lml) / sum_k exp(lml_k - max lml)`.
    #[default]
    PosteriorSoftmax,
    /// `w_m = lml_m / sum_k lml_k`.
    LmlRatio,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::PosteriorSoftmax => "posterior-softmax",
            Weighting::LmlRatio => "lml-ratio",
        })
    }
}

impl FromStr for Weighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "posterior-softmax" | "posterior_softmax" | "softmax" => Ok(Weighting::PosteriorSoftmax),
            "lml-ratio" | "lml_ratio" => Ok(Weighting::LmlRatio),
            other => Err(format!("unknown weighting {other:?}")),
        }
    }
}

pub fn weights_from_lml(lml: &[f64], weighting: Weighting) -> Result<Vec<f64>, SelectError> {
    if lml.is_empty() {
        return Err(SelectError::EmptyAverage);
    }
    match weighting {
        Weighting::PosteriorSoftmax => {
            let max = lml.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = lml.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = e.iter().sum();
            Ok(e.into_iter().map(|v| v / total).collect())
        }
        Weighting::LmlRatio => {
            let total: f64 = lml.iter().sum();
            if total == 0.0 {
                return Err(SelectError::ZeroTotal);
            }
            let w: Vec<f64> = lml.iter().map(|l| l / total).collect();
            if let Some((model, &weight)) = w.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(SelectError::NegativeWeight { model, weight });
            }
            Ok(w)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmaMember {
    pub features: Vec<String>,
    /// Column of each member feature in the averaged view.
    pub columns: Vec<usize>,
    pub fit: LogitFit,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAverage {
    pub members: Vec<BmaMember>,
    pub weighting: Weighting,
    /// Width of the rows `bma_predict` accepts.
    pub n_features: usize,
}

impl ModelAverage {
    /// Builds an average over explicit members; weights must be non-negative and sum to 1.
    pub fn new(members: Vec<BmaMember>, weighting: Weighting, n_features: usize) -> Result<Self, SelectError> {
        if members.is_empty() {
            return Err(SelectError::EmptyAverage);
        }
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if members.iter().any(|m| !m.weight.is_finite() || m.weight < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(SelectError::InvalidWeights);
        }
        if let Some(&c) = members.iter().flat_map(|m| &m.columns).find(|&&c| c >= n_features) {
            return Err(SelectError::DimensionMismatch { expected: n_features, got: c + 1 });
        }
        Ok(ModelAverage { members, weighting, n_features })
    }

    /// Total weight of the members containing each feature, in the given order.
    pub fn inclusion_probabilities(&self, feature_names: &[String]) -> Vec<(String, f64)> {
        feature_names
            .iter()
            .map(|f| {
                let p = self.members.iter().filter(|m| m.features.contains(f)).map(|m| m.weight).sum();
                (f.clone(), p)
            })
            .collect()
    }

    /// Members sorted by weight descending; ties keep visit order.
    pub fn ranked(&self) -> Vec<&BmaMember> {
        let mut out: Vec<&BmaMember> = self.members.iter().collect();
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        out
    }
}

/// Averages every distinct visited model of `trace`, fits included.
pub fn bma_average(
    trace: &SelectionTrace,
    view: &FeatureView,
    weighting: Weighting,
) -> Result<ModelAverage, SelectError> {
    let mut distinct: Vec<&super::VisitedModel> = Vec::new();
    for m in &trace.visited_models {
        if !distinct.iter().any(|d| d.features == m.features) {
            distinct.push(m);
        }
    }
    let lml: Vec<f64> = distinct.iter().map(|m| m.lml()).collect();
    let weights = weights_from_lml(&lml, weighting)?;
    let members = distinct
        .into_iter()
        .zip(weights)
        .map(|(m, weight)| {
            let columns = m
                .features
                .iter()
                .map(|f| view.column_index(f).ok_or_else(|| SelectError::UnknownFeature(f.clone())))
                .collect::<Result<_, _>>()?;
            Ok(BmaMember { features: m.features.clone(), columns, fit: m.fit.clone(), weight })
        })
        .collect::<Result<Vec<_>, SelectError>>()?;
    Ok(ModelAverage { members, weighting, n_features: view.n_features() })
}

/// Weighted mean of the members' plug-in probabilities, each on its own columns of `row`.
pub fn bma_predict(avg: &ModelAverage, row: &[f64]) -> Result<f64, SelectError> {
    if row.len() != avg.n_features {
        return Err(SelectError::DimensionMismatch { expected: avg.n_features, got: row.len() });
    }
    let mut total = 0.0;
    let mut projected = Vec::new();
    for m in &avg.members {
        projected.clear();
        projected.extend(m.columns.iter().map(|&c| row[c]));
        total += m.weight * predict_prob(&m.fit, &projected)?;
    }
    Ok(total)
}

/// Membership table of the `top` heaviest members: one row per feature appearing in any of
/// them (0/1 cells), then a final `weight` row.
pub fn write_membership_csv<W: Write>(
    avg: &ModelAverage,
    feature_order: &[String],
    top: usize,
    mut w: W,
) -> io::Result<()> {
    let shown: Vec<&BmaMember> = avg.ranked().into_iter().take(top.max(1)).collect();
    write!(w, "feature")?;
    for k in 1..=shown.len() {
        write!(w, ",model_{k}")?;
    }
    writeln!(w)?;
    for f in feature_order.iter().filter(|f| shown.iter().any(|m| m.features.contains(f))) {
        write!(w, "{f}")?;
        for m in &shown {
            write!(w, ",{}", u8::from(m.features.contains(f)))?;
        }
        writeln!(w)?;
    }
    write!(w, "weight")?;
    for m in &shown {
        write!(w, ",{}", m.weight)?;
    }
    writeln!(w)
}
