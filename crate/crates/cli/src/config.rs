use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use falls_core::cohort::{load_cohort, ItemSchema};
use falls_core::dtree::{SplitCriterion, TreeConfig};
use falls_core::msearch::SelectConfig;
use falls_core::{CohortDataset, ForestConfig, MethodConfig, SelectionMode, ThresholdRule, Weighting};

use crate::args::{DataArgs, Fidelity, ModelArgs};
use crate::CliError;

/// Everything that determines a run's output, rendered into every file it writes.
#[derive(Debug, Default)]
pub struct RunConfig {
    fields: Vec<(&'static str, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        let mut rc = RunConfig::default();
        rc.set("command", command);
        rc
    }

    pub fn set(&mut self, key: &'static str, value: impl ToString) {
        self.fields.push((key, value.to_string()));
    }

    /// `# config: key=value ...` without a trailing newline.
    pub fn header(&self) -> String {
        let mut s = String::from("# config:");
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

pub fn load_schema(path: Option<&Path>) -> Result<ItemSchema, CliError> {
    match path {
        None => Ok(ItemSchema::reference()),
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Ok(ItemSchema::from_csv_reader(file)?)
        }
    }
}

pub fn load_data(data: &DataArgs, rc: &mut RunConfig) -> Result<CohortDataset, CliError> {
    let schema = load_schema(data.schema.as_deref())?;
    rc.set("input", data.input.display());
    rc.set("schema", data.schema.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()));
    let dataset = load_cohort(&data.input, &schema)?;
    log::info!("loaded {} participants from {}", dataset.len(), data.input.display());
    Ok(dataset)
}

/// Resolved model settings and the threshold rule, with their entries added to `rc`.
pub fn resolve_model(m: &ModelArgs, rc: &mut RunConfig) -> Result<(MethodConfig, ThresholdRule), CliError> {
    if !(m.v0 > 0.0 && m.v0.is_finite()) {
        return Err(CliError::Usage(format!("--v0 must be positive and finite, got {}", m.v0)));
    }
    if m.n_trees == 0 {
        return Err(CliError::Usage("--n-trees must be at least 1".into()));
    }
    if m.mtry == Some(0) {
        return Err(CliError::Usage("--mtry must be at least 1".into()));
    }
    if m.rf_top_k == 0 || m.bma_top == 0 {
        return Err(CliError::Usage("--rf-top-k and --bma-top must be at least 1".into()));
    }
    let has = |f: Fidelity| m.fidelity.contains(&f);

    let weighting = match (m.weighting, has(Fidelity::LmlRatioWeights)) {
        (Some(Weighting::PosteriorSoftmax), true) => {
            return Err(CliError::Usage(
                "--weighting posterior-softmax conflicts with --fidelity lml-ratio-weights".into(),
            ))
        }
        (_, true) => Weighting::LmlRatio,
        (w, false) => w.unwrap_or_default(),
    };
    let criterion = if has(Fidelity::EntropySplits) { SplitCriterion::Entropy } else { SplitCriterion::Gini };
    let selection = if has(Fidelity::FullDataSelection) { SelectionMode::FullData } else { SelectionMode::PerFold };
    let rule = if has(Fidelity::ThresholdBalance) { ThresholdRule::Balance } else { ThresholdRule::Youden };

    let tree = TreeConfig {
        min_node_size: m.min_node_size,
        min_impurity_decrease: m.min_impurity_decrease,
        max_depth: m.max_depth,
        criterion,
    };
    tree.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let default_forest = ForestConfig::default();
    let forest = ForestConfig {
        n_trees: m.n_trees,
        mtry: m.mtry,
        tree_config: TreeConfig { criterion, ..default_forest.tree_config },
        ..default_forest
    };
    let config = MethodConfig {
        tree,
        forest,
        select: SelectConfig { prior_variance: m.v0, evidence: m.evidence },
        weighting,
        selection,
        rf_top_k: m.rf_top_k,
    };

    rc.set("seed", m.seed.map_or("none".to_string(), |s| s.to_string()));
    rc.set("v0", m.v0);
    rc.set("evidence", m.evidence);
    rc.set("weighting", weighting);
    rc.set(
        "selection",
        match selection {
            SelectionMode::PerFold => "per-fold",
            SelectionMode::FullData => "full-data",
        },
    );
    rc.set("threshold", rule);
    rc.set(
        "criterion",
        match criterion {
            SplitCriterion::Gini => "gini",
            SplitCriterion::Entropy => "entropy",
        },
    );
    rc.set("min_node_size", m.min_node_size);
    rc.set("max_depth", m.max_depth);
    rc.set("min_impurity_decrease", m.min_impurity_decrease);
    rc.set("n_trees", m.n_trees);
    rc.set("mtry", m.mtry.map_or("sqrt".to_string(), |k| k.to_string()));
    rc.set("rf_top_k", m.rf_top_k);
    rc.set("bma_top", m.bma_top);
    rc.set("strict", m.strict);
    Ok((config, rule))
}

/// The seed, which must be given when a forest is fitted.
pub fn require_seed(m: &ModelArgs, needs_seed: bool, what: &str) -> Result<u64, CliError> {
    match m.seed {
        Some(s) => Ok(s),
        None if needs_seed => Err(CliError::Usage(format!("--seed is required for {what}"))),
        None => Ok(0),
    }
}
