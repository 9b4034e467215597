use std::io::{self, Write};

use crate::cohort::{build_view, CohortDataset, FeatureView, Horizon, Scheme};
use crate::eval::{evaluate, fmt_metric, loocv_scores, EvaluationReport, ThresholdRule};
use crate::methods::{fit_method, FittedModel, Method, MethodConfig, MethodFitter, SelectionMode};
use crate::rng::derive_seed;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub schemes: Vec<Scheme>,
    pub methods: Vec<Method>,
    pub horizons: Vec<Horizon>,
    pub method: MethodConfig,
    pub threshold_rule: ThresholdRule,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            schemes: Scheme::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            horizons: Horizon::ALL.to_vec(),
            method: MethodConfig::default(),
            threshold_rule: ThresholdRule::default(),
            seed: 0,
        }
    }
}

impl SuiteConfig {
    /// Seed for one cell, independent of which other cells are run.
    pub fn cell_seed(&self, scheme: Scheme, horizon: Horizon, method: Method) -> u64 {
        let h = match horizon {
            Horizon::M6 => 0,
            Horizon::M12 => 1,
        };
        derive_seed(derive_seed(derive_seed(self.seed, scheme.index() as u64), h), method.index() as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub report: EvaluationReport,
    /// Variables selected by the full-data fit.
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scheme: Scheme,
    pub horizon: Horizon,
    pub method: Method,
    pub outcome: Result<CellOutcome, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    /// Ordered by horizon, then scheme, then method, each in the configured order.
    pub cells: Vec<CellResult>,
}

impl SuiteReport {
    pub fn cell(&self, scheme: Scheme, horizon: Horizon, method: Method) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.scheme == scheme && c.horizon == horizon && c.method == method)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&CellResult, &Error)> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().err().map(|e| (c, e)))
    }
}

/// Full-data fit of `method` on `view` plus its LOOCV evaluation. With
/// [`SelectionMode::FullData`] the folds reuse the full-data feature sets.
pub fn cross_validate(
    view: &FeatureView,
    method: Method,
    config: &MethodConfig,
    rule: ThresholdRule,
    seed: u64,
) -> Result<(FittedModel, EvaluationReport), Error> {
    let full = fit_method(method, view, config, seed)?;
    let frozen = (config.selection == SelectionMode::FullData).then_some(&full);
    let fitter = MethodFitter { method, config, frozen };
    let scores = loocv_scores(view, &fitter, seed)?;
    let report = evaluate(&scores, rule)?;
    Ok((full, report))
}

fn run_cell(
    dataset: &CohortDataset,
    scheme: Scheme,
    horizon: Horizon,
    method: Method,
    config: &SuiteConfig,
) -> Result<CellOutcome, Error> {
    let view = build_view(dataset, scheme, horizon)?;
    let seed = config.cell_seed(scheme, horizon, method);
    let (full, report) = cross_validate(&view, method, &config.method, config.threshold_rule, seed)?;
    let selected = full.selected_variables(view.feature_names(), config.method.rf_top_k);
    Ok(CellOutcome { report, selected })
}

/// Cross-validated evaluation of every (horizon, scheme, method) cell. A failing cell is
/// recorded and the rest of the grid still runs.
pub fn run_scheme_suite(dataset: &CohortDataset, config: &SuiteConfig) -> SuiteReport {
    let mut cells = Vec::new();
    for &horizon in &config.horizons {
        for &scheme in &config.schemes {
            for &method in &config.methods {
                log::info!("cell {scheme}/{horizon}/{method}");
                let outcome = run_cell(dataset, scheme, horizon, method, config);
                if let Err(e) = &outcome {
                    log::warn!("cell {scheme}/{horizon}/{method} failed: {e}");
                }
                cells.push(CellResult { scheme, horizon, method, outcome });
            }
        }
    }
    SuiteReport { config: config.clone(), cells }
}

/// Grid for one horizon: one row per scheme, columns `<metric>_<method>` for accuracy,
/// sensitivity, specificity and AUC. Failed cells read `ERR`.
pub fn write_grid_csv<W: Write>(report: &SuiteReport, horizon: Horizon, mut w: W) -> io::Result<()> {
    let methods = &report.config.methods;
    let metrics = ["accuracy", "sensitivity", "specificity", "auc"];
    write!(w, "scheme")?;
    for m in metrics {
        for method in methods {
            write!(w, ",{m}_{method}")?;
        }
    }
    writeln!(w)?;
    for &scheme in &report.config.schemes {
        write!(w, "{scheme}")?;
        for k in 0..metrics.len() {
            for &method in methods {
                let cell = match report.cell(scheme, horizon, method).map(|c| &c.outcome) {
                    Some(Ok(o)) => {
                        let r = &o.report;
                        let v = [r.metrics.accuracy, r.metrics.sensitivity, r.metrics.specificity, r.roc.auc][k];
                        fmt_metric(v)
                    }
                    _ => "ERR".to_string(),
                };
                write!(w, ",{cell}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `horizon,scheme,<method>...` with each cell listing selected variables joined by `;`.
pub fn write_selected_csv<W: Write>(report: &SuiteReport, mut w: W) -> io::Result<()> {
    write!(w, "horizon,scheme")?;
    for method in &report.config.methods {
        write!(w, ",{method}")?;
    }
    writeln!(w)?;
    for &horizon in &report.config.horizons {
        for &scheme in &report.config.schemes {
            write!(w, "{horizon},{scheme}")?;
            for &method in &report.config.methods {
                let cell = match report.cell(scheme, horizon, method).map(|c| &c.outcome) {
                    Some(Ok(o)) => o.selected.join(";"),
                    _ => "ERR".to_string(),
                };
                write!(w, ",{cell}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
