use log::warn;

use super::SelectError;
use crate::blogit::{
    fit_problem, EvidenceApprox, LogitError, LogitFit, LogitModel, LogitProblem, DEFAULT_PRIOR_VARIANCE,
};
use crate::cohort::FeatureView;

/// lml differences below this are ties, broken by feature name.
const LML_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectConfig {
    pub prior_variance: f64,
    pub evidence: EvidenceApprox,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { prior_variance: DEFAULT_PRIOR_VARIANCE, evidence: EvidenceApprox::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub added_feature: String,
    pub lml_after: f64,
}

/// A model evaluated during the search, with its fit.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitedModel {
    /// Features in view column order.
    pub features: Vec<String>,
    pub fit: LogitFit,
}

impl VisitedModel {
    pub fn lml(&self) -> f64 {
        self.fit.lml
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    /// Intercept-only first, then every converged candidate in evaluation order.
    pub visited_models: Vec<VisitedModel>,
    pub preferred_model: Vec<String>,
    /// Candidates dropped because their fit did not converge or was singular.
    pub skipped: usize,
}

impl SelectionTrace {
    pub fn preferred(&self) -> &VisitedModel {
        self.visited_models
            .iter()
            .find(|m| m.features == self.preferred_model)
            .expect("preferred model is always visited")
    }
}

pub fn forward_select(view: &FeatureView, v0: f64) -> Result<SelectionTrace, SelectError> {
    forward_select_with(view, &SelectConfig { prior_variance: v0, ..SelectConfig::default() })
}

fn fit_columns(view: &FeatureView, cols: &[usize], config: &SelectConfig) -> Result<LogitFit, LogitError> {
    let names: Vec<String> = cols.iter().map(|&c| view.feature_names()[c].clone()).collect();
    let model = LogitModel::new(names.clone(), config.prior_variance).with_evidence(config.evidence);
    let problem = LogitProblem::new(view, &model)?;
    fit_problem(&problem, names, config.evidence)
}

/// Greedy forward selection from the intercept-only model: each step adds the candidate
/// with the highest lml, stopping once no candidate improves on the current model.
pub fn forward_select_with(view: &FeatureView, config: &SelectConfig) -> Result<SelectionTrace, SelectError> {
    let base = fit_columns(view, &[], config)?;
    let mut current_lml = base.lml;
    let mut visited = vec![VisitedModel { features: Vec::new(), fit: base }];
    let mut current: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut skipped = 0;
    let names = view.feature_names();
    loop {
        let mut best: Option<(usize, usize)> = None; // (feature column, index into visited)
        for c in (0..view.n_features()).filter(|c| !current.contains(c)) {
            let mut cols = current.clone();
            cols.push(c);
            cols.sort_unstable();
            let fit = match fit_columns(view, &cols, config) {
                Ok(f) if f.converged => f,
                Ok(f) => {
                    warn!("skipping candidate {}: no convergence after {} iterations", names[c], f.n_iterations);
                    skipped += 1;
                    continue;
                }
                Err(e) => {
                    warn!("skipping candidate {}: {e}", names[c]);
                    skipped += 1;
                    continue;
                }
            };
            let lml = fit.lml;
            let features = cols.iter().map(|&k| names[k].clone()).collect();
            visited.push(VisitedModel { features, fit });
            let idx = visited.len() - 1;
            let better = match best {
                None => true,
                Some((bc, bi)) => {
                    let b = visited[bi].lml();
                    lml > b + LML_TIE || (lml >= b - LML_TIE && names[c] < names[bc])
                }
            };
            if better {
                best = Some((c, idx));
            }
        }
        match best {
            Some((c, idx)) if visited[idx].lml() > current_lml => {
                current_lml = visited[idx].lml();
                current = visited[idx].fit.feature_names.iter().map(|n| view.column_index(n).unwrap()).collect();
                steps.push(SelectionStep { added_feature: names[c].clone(), lml_after: current_lml });
            }
            _ => break,
        }
    }
    let preferred_model = current.iter().map(|&k| names[k].clone()).collect();
    Ok(SelectionTrace { steps, visited_models: visited, preferred_model, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blogit::fit_map;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_view(seed: u64, n: usize, p: usize, signal: Option<(usize, f64)>) -> FeatureView {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..p).map(|_| f64::from(rng.random_range(0u8..=4))).collect();
            let eta = signal.map_or(0.0, |(j, b)| b * (row[j] - 2.0));
            labels.push(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
            rows.push(row);
        }
        FeatureView::new((0..p).map(|j| format!("f{j}")).collect(), rows, labels).unwrap()
    }

    fn lml_of(view: &FeatureView, names: &[&str]) -> f64 {
        let model = LogitModel::new(names.iter().map(|s| s.to_string()).collect(), 1000.0);
        fit_map(view, &model).unwrap().lml
    }

    #[test]
    fn causal_feature_enters_first() {
        let v = random_view(11, 60, 6, Some((3, 3.0)));
        let trace = forward_select(&v, 1000.0).unwrap();
        assert_eq!(trace.steps[0].added_feature, "f3");
    }

    #[test]
    fn steps_strictly_increase_and_match_preferred() {
        for seed in 0..10 {
            let v = random_view(seed, 40, 4, Some((1, 1.0)));
            let trace = forward_select(&v, 1000.0).unwrap();
            let mut prev = trace.visited_models[0].lml();
            for s in &trace.steps {
                assert!(s.lml_after > prev);
                prev = s.lml_after;
            }
            assert_eq!(trace.preferred().lml(), prev);
            assert_eq!(trace.preferred_model.len(), trace.steps.len());
        }
    }

    #[test]
    fn greedy_path_matches_exhaustive_argmax() {
        // Oracle: at each step, argmax over single additions computed from independent fits.
        for seed in 0..8 {
            let v = random_view(100 + seed, 30, 3, Some((0, 1.2)));
            let trace = forward_select(&v, 1000.0).unwrap();
            let all = ["f0", "f1", "f2"];
            let mut current: Vec<&str> = Vec::new();
            let mut current_lml = lml_of(&v, &[]);
            loop {
                let mut best: Option<(&str, f64)> = None;
                for &c in all.iter().filter(|c| !current.contains(c)) {
                    let mut set = current.clone();
                    set.push(c);
                    set.sort_unstable();
                    let l = lml_of(&v, &set);
                    if best.is_none_or(|(_, b)| l > b) {
                        best = Some((c, l));
                    }
                }
                match best {
                    Some((c, l)) if l > current_lml => {
                        current.push(c);
                        current.sort_unstable();
                        current_lml = l;
                    }
                    _ => break,
                }
            }
            assert_eq!(trace.preferred_model, current);
        }
    }

    #[test]
    fn visited_models_are_distinct() {
        let v = random_view(4, 40, 5, Some((2, 2.0)));
        let trace = forward_select(&v, 1000.0).unwrap();
        for (i, a) in trace.visited_models.iter().enumerate() {
            for b in &trace.visited_models[i + 1..] {
                assert_ne!(a.features, b.features);
            }
        }
        assert!(trace.visited_models[0].features.is_empty());
    }

    #[test]
    fn no_features_gives_intercept_only() {
        let v = FeatureView::new(vec![], vec![vec![]; 4], vec![true, false, true, true]).unwrap();
        let trace = forward_select(&v, 1000.0).unwrap();
        assert!(trace.preferred_model.is_empty());
        assert_eq!(trace.visited_models.len(), 1);
    }

    #[test]
    fn ties_prefer_smaller_name() {
        // Two identical columns give identical lml; the lexicographically smaller wins.
        let base = random_view(9, 40, 1, Some((0, 3.0)));
        let rows: Vec<Vec<f64>> = base.rows().iter().map(|r| vec![r[0], r[0]]).collect();
        let v = FeatureView::new(vec!["zeta".into(), "alpha".into()], rows, base.labels().to_vec()).unwrap();
        let trace = forward_select(&v, 1000.0).unwrap();
        assert_eq!(trace.steps[0].added_feature, "alpha");
    }
}
