use std::fs;
use std::io::{self, Write};

use falls_core::cohort::{generate_synthetic, write_cohort};
use falls_core::eval::{
    describe_cohort, fmt_metric, write_describe_csv, write_metrics_csv, write_report_csv, write_roc_csv,
};
use falls_core::msearch::{write_grid_csv, write_membership_csv, write_selected_csv, SelectionTrace};
use falls_core::{
    build_view, cross_validate, fit_method, run_scheme_suite, FeatureView, FittedModel, Horizon, Method, Scenario,
    Scheme, SuiteConfig,
};

use crate::args::{AnalysisArgs, DescribeArgs, GridArgs, SynthArgs};
use crate::config::{load_data, load_schema, require_seed, resolve_model, RunConfig};
use crate::output::{write_atomic, Outputs};
use crate::CliError;

fn write_trace(trace: &SelectionTrace, w: &mut Vec<u8>) -> io::Result<()> {
    writeln!(w, "step,added_feature,lml")?;
    writeln!(w, "0,,{}", trace.visited_models[0].lml())?;
    for (k, s) in trace.steps.iter().enumerate() {
        writeln!(w, "{},{},{}", k + 1, s.added_feature, s.lml_after)?;
    }
    Ok(())
}

/// Model files shared by `fit` and `crossval`. Returns the number of candidate models
/// skipped during selection.
fn write_model(
    out: &mut Outputs,
    stem: &str,
    model: &FittedModel,
    view: &FeatureView,
    rf_top_k: usize,
    bma_top: usize,
) -> Result<usize, CliError> {
    let selected = model.selected_variables(view.feature_names(), rf_top_k);
    out.write(&format!("{stem}_selected.csv"), |w| {
        writeln!(w, "variable")?;
        selected.iter().try_for_each(|v| writeln!(w, "{v}"))
    })?;
    let mut skipped = 0;
    match model {
        FittedModel::Tree(tree) => out.write(&format!("{stem}_tree.txt"), |w| write!(w, "{}", tree.render()))?,
        FittedModel::Forest(forest) => {
            out.write(&format!("{stem}_importance.csv"), |w| forest.write_importance_csv(w))?
        }
        FittedModel::Logit { fit, trace, .. } => {
            out.write(&format!("{stem}_coefficients.csv"), |w| falls_core::blogit::write_fit_summary(fit, w))?;
            if let Some(trace) = trace {
                skipped = trace.skipped;
                out.write(&format!("{stem}_selection.csv"), |w| write_trace(trace, w))?;
            }
        }
        FittedModel::Bma { average, trace } => {
            out.write(&format!("{stem}_membership.csv"), |w| {
                write_membership_csv(average, view.feature_names(), bma_top, w)
            })?;
            out.write(&format!("{stem}_inclusion.csv"), |w| {
                writeln!(w, "feature,probability")?;
                for (f, p) in average.inclusion_probabilities(view.feature_names()) {
                    writeln!(w, "{f},{p}")?;
                }
                Ok(())
            })?;
            if let Some(trace) = trace {
                skipped = trace.skipped;
                out.write(&format!("{stem}_selection.csv"), |w| write_trace(trace, w))?;
            }
        }
    }
    Ok(skipped)
}

fn check_skipped(strict: bool, skipped: usize) -> Result<(), CliError> {
    if strict && skipped > 0 {
        return Err(CliError::Numerical(format!("{skipped} candidate models failed to converge during selection")));
    }
    Ok(())
}

struct Cell {
    rc: RunConfig,
    view: FeatureView,
    config: falls_core::MethodConfig,
    rule: falls_core::ThresholdRule,
    seed: u64,
    stem: String,
}

fn prepare(command: &str, a: &AnalysisArgs) -> Result<Cell, CliError> {
    let mut rc = RunConfig::new(command);
    let dataset = load_data(&a.data, &mut rc)?;
    rc.set("scheme", a.scheme);
    rc.set("method", a.method);
    rc.set("horizon", a.horizon);
    let (config, rule) = resolve_model(&a.model, &mut rc)?;
    let seed = require_seed(&a.model, a.method == Method::Rf, "--method rf")?;
    let view = build_view(&dataset, a.scheme, a.horizon)?;
    let stem = format!("{}_{}_{}", a.scheme, a.method, a.horizon);
    Ok(Cell { rc, view, config, rule, seed, stem })
}

pub fn fit(a: &AnalysisArgs) -> Result<(), CliError> {
    let cell = prepare("fit", a)?;
    let model = fit_method(a.method, &cell.view, &cell.config, cell.seed)?;
    let mut out = Outputs::in_dir(&a.out, &cell.rc)?;
    let skipped = write_model(&mut out, &cell.stem, &model, &cell.view, cell.config.rf_top_k, a.model.bma_top)?;
    let selected = model.selected_variables(cell.view.feature_names(), cell.config.rf_top_k);
    println!("{}: selected {}", cell.stem, if selected.is_empty() { "(none)".into() } else { selected.join(", ") });
    check_skipped(a.model.strict, skipped)
}

pub fn crossval(a: &AnalysisArgs) -> Result<(), CliError> {
    let cell = prepare("crossval", a)?;
    log::info!("cross-validating {} over {} participants", cell.stem, cell.view.n_rows());
    let (model, report) = cross_validate(&cell.view, a.method, &cell.config, cell.rule, cell.seed)?;
    let mut out = Outputs::in_dir(&a.out, &cell.rc)?;
    let stem = &cell.stem;
    out.write(&format!("{stem}_report.csv"), |w| write_report_csv(&report, w))?;
    out.write(&format!("{stem}_metrics.csv"), |w| write_metrics_csv(&report, w))?;
    out.write(&format!("{stem}_roc.csv"), |w| write_roc_csv(&report.roc, w))?;
    let skipped = write_model(&mut out, stem, &model, &cell.view, cell.config.rf_top_k, a.model.bma_top)?;
    let m = &report.metrics;
    println!(
        "{stem}: accuracy {} sensitivity {} specificity {} auc {}",
        fmt_metric(m.accuracy),
        fmt_metric(m.sensitivity),
        fmt_metric(m.specificity),
        fmt_metric(report.roc.auc)
    );
    check_skipped(a.model.strict, skipped)
}

pub fn roc_export(a: &AnalysisArgs) -> Result<(), CliError> {
    let cell = prepare("roc-export", a)?;
    let (_, report) = cross_validate(&cell.view, a.method, &cell.config, cell.rule, cell.seed)?;
    let mut out = Outputs::in_dir(&a.out, &cell.rc)?;
    out.write(&format!("{}_roc.csv", cell.stem), |w| write_roc_csv(&report.roc, w))
}

fn or_all<T: Clone>(chosen: &[T], all: &[T]) -> Vec<T> {
    if chosen.is_empty() { all } else { chosen }.to_vec()
}

fn list<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn grid(a: &GridArgs) -> Result<(), CliError> {
    let mut rc = RunConfig::new("grid");
    let dataset = load_data(&a.data, &mut rc)?;
    let schemes: Vec<Scheme> = or_all(&a.scheme, &Scheme::ALL);
    let methods: Vec<Method> = or_all(&a.method, &Method::ALL);
    let horizons: Vec<Horizon> = or_all(&a.horizon, &Horizon::ALL);
    rc.set("schemes", list(&schemes));
    rc.set("methods", list(&methods));
    rc.set("horizons", list(&horizons));
    let (method, threshold_rule) = resolve_model(&a.model, &mut rc)?;
    let seed = require_seed(&a.model, methods.contains(&Method::Rf), "grids that include rf")?;

    let config = SuiteConfig { schemes, methods, horizons, method, threshold_rule, seed };
    log::info!("running {} cells", config.schemes.len() * config.methods.len() * config.horizons.len());
    let report = run_scheme_suite(&dataset, &config);

    let mut out = Outputs::in_dir(&a.out, &rc)?;
    for &h in &config.horizons {
        out.write(&format!("grid_{h}.csv"), |w| write_grid_csv(&report, h, w))?;
    }
    out.write("cells.csv", |w| {
        writeln!(w, "horizon,scheme,method,status,accuracy,sensitivity,specificity,auc,threshold,tp,fp,tn,fn")?;
        for c in &report.cells {
            write!(w, "{},{},{},", c.horizon, c.scheme, c.method)?;
            match &c.outcome {
                Ok(o) => {
                    let (r, k) = (&o.report, &o.report.counts);
                    writeln!(
                        w,
                        "ok,{},{},{},{},{},{},{},{},{}",
                        fmt_metric(r.metrics.accuracy),
                        fmt_metric(r.metrics.sensitivity),
                        fmt_metric(r.metrics.specificity),
                        fmt_metric(r.roc.auc),
                        r.chosen_threshold,
                        k.tp,
                        k.fp,
                        k.tn,
                        k.fn_
                    )?;
                }
                Err(e) => {
                    let status = if e.is_numerical() { "numerical" } else { "error" };
                    writeln!(w, "{status},NA,NA,NA,NA,NA,NA,NA,NA,NA")?;
                }
            }
        }
        Ok(())
    })?;
    out.write("selected_variables.csv", |w| write_selected_csv(&report, w))?;

    let failed = report.failures().count();
    let numerical = report.failures().filter(|(_, e)| e.is_numerical()).count();
    println!("{} cells evaluated, {failed} failed; wrote {} files", report.cells.len(), out.written().len());
    if a.model.strict && numerical > 0 {
        return Err(CliError::Numerical(format!("{numerical} grid cells failed numerically")));
    }
    Ok(())
}

pub fn describe(a: &DescribeArgs) -> Result<(), CliError> {
    let mut rc = RunConfig::new("describe");
    let dataset = load_data(&a.data, &mut rc)?;
    let horizons = a.horizon.map_or(Horizon::ALL.to_vec(), |h| vec![h]);
    rc.set("horizons", list(&horizons));
    let mut out = Outputs::in_dir(&a.out, &rc)?;
    for h in horizons {
        let summary = describe_cohort(&dataset, h);
        out.write(&format!("describe_{h}.csv"), |w| write_describe_csv(&summary, w))?;
    }
    Ok(())
}

fn scenario_summary(sc: &Scenario) -> String {
    let map = |m: &std::collections::BTreeMap<u8, f64>| {
        m.iter().map(|(id, v)| format!("{id}:{v}")).collect::<Vec<_>>().join(";")
    };
    format!(
        "n_participants={} intercept={} intercept_12m={} score_mean={} score_sd={} latent_loading={} \
         male_fraction={} alone_fraction={} coef={} mean={} sd={} loading={}",
        sc.n_participants,
        sc.intercept,
        sc.intercept_12m.unwrap_or(sc.intercept),
        sc.score_mean_frac,
        sc.score_sd_frac,
        sc.latent_loading,
        sc.male_fraction,
        sc.alone_fraction,
        map(&sc.coefficients),
        map(&sc.item_mean),
        map(&sc.item_sd),
        map(&sc.item_loading),
    )
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let schema = load_schema(a.schema.as_deref())?;
    let scenario = match &a.scenario {
        None => Scenario::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Scenario::parse(&text)?
        }
    };
    let mut rc = RunConfig::new("synth");
    rc.set("seed", a.seed);
    rc.set("scenario", a.scenario.as_ref().map_or("default".to_string(), |p| p.display().to_string()));
    rc.set("schema", a.schema.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()));
    rc.set("resolved", scenario_summary(&scenario));
    let dataset = generate_synthetic(&scenario, &schema, a.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    write_atomic(&a.out, &rc, |w| write_cohort(&dataset, w).map_err(|e| io::Error::other(e.to_string())))?;
    println!("wrote {} participants to {}", dataset.len(), a.out.display());
    Ok(())
}
