//! Random forests of classification trees.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;

use crate::cohort::FeatureView;
use crate::dtree::{grow, DecisionTree, Prediction, SplitCriterion, TreeConfig, TreeError};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features sampled per node; `floor(sqrt(p))` (at least 1) when `None`.
    pub mtry: Option<usize>,
    pub tree_config: TreeConfig,
    /// Draw a bootstrap sample per tree. Disabling it trains every tree on all rows.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            tree_config: TreeConfig {
                min_node_size: 1,
                min_impurity_decrease: 0.0,
                max_depth: 30,
                criterion: SplitCriterion::Gini,
            },
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        match self.mtry {
            Some(m) => m.min(p).max(1),
            None => ((p as f64).sqrt().floor() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub feature_names: Vec<String>,
    importance: Vec<f64>,
}

impl RandomForest {
    /// Majority vote (ties to non-faller) and the share of trees voting faller.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction, TreeError> {
        predict_forest(self, row)
    }

    /// Impurity importance per feature, normalised to sum to one (all zero when no tree
    /// split).
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    /// `(feature, importance)` pairs sorted by importance descending, then name.
    pub fn ranked_importance(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> =
            self.feature_names.iter().cloned().zip(self.importance.iter().copied()).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// Top `k` features with strictly positive importance.
    pub fn top_features(&self, k: usize) -> Vec<String> {
        self.ranked_importance().into_iter().filter(|(_, v)| *v > 0.0).take(k).map(|(n, _)| n).collect()
    }

    pub fn write_importance_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "feature,importance")?;
        for (name, v) in self.ranked_importance() {
            writeln!(w, "{name},{v}")?;
        }
        Ok(())
    }
}

pub fn fit_forest(view: &FeatureView, config: &ForestConfig, seed: u64) -> Result<RandomForest, TreeError> {
    config.tree_config.validate()?;
    if config.n_trees == 0 {
        return Err(TreeError::InvalidConfig("n_trees must be at least 1".into()));
    }
    if view.is_empty() {
        return Err(TreeError::EmptyView);
    }
    let n = view.n_rows();
    let p = view.n_features();
    if p == 0 {
        return Err(TreeError::InvalidConfig("view has no features".into()));
    }
    let mtry = config.resolved_mtry(p);
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut raw = vec![0.0; p];
    for t in 0..config.n_trees {
        let mut rng = stream(seed, t as u64);
        let idx: Vec<usize> =
            if config.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
        let mut candidates = || {
            let mut f = sample(&mut rng, p, mtry).into_vec();
            f.sort_unstable();
            f
        };
        let root = grow(view.rows(), view.labels(), &idx, &config.tree_config, &mut candidates);
        let total = idx.len() as f64;
        root.for_each_split(&mut |f, n_node, d| raw[f] += n_node as f64 / total * d);
        trees.push(DecisionTree { root, feature_names: view.feature_names().to_vec() });
    }
    let sum: f64 = raw.iter().sum();
    let importance = if sum > 0.0 { raw.iter().map(|v| v / sum).collect() } else { vec![0.0; p] };
    Ok(RandomForest { trees, feature_names: view.feature_names().to_vec(), importance })
}

pub fn predict_forest(forest: &RandomForest, row: &[f64]) -> Result<Prediction, TreeError> {
    let mut votes = 0usize;
    for tree in &forest.trees {
        if tree.predict(row)?.class {
            votes += 1;
        }
    }
    let t = forest.trees.len();
    Ok(Prediction { class: votes * 2 > t, prob_fall: votes as f64 / t as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::fit_tree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noisy_view(seed: u64, n: usize) -> FeatureView {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..4).map(|_| f64::from(rng.random_range(0u8..=4))).collect();
            let eta = 1.5 * (row[0] - 2.0);
            labels.push(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
            rows.push(row);
        }
        FeatureView::new((0..4).map(|j| format!("f{j}")).collect(), rows, labels).unwrap()
    }

    #[test]
    fn same_seed_same_forest() {
        let v = noisy_view(1, 60);
        let cfg = ForestConfig { n_trees: 25, ..Default::default() };
        let a = fit_forest(&v, &cfg, 9).unwrap();
        let b = fit_forest(&v, &cfg, 9).unwrap();
        assert_eq!(a, b);
        let c = fit_forest(&v, &cfg, 10).unwrap();
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn single_tree_without_bagging_matches_tree() {
        let v = noisy_view(2, 50);
        let tree_config = TreeConfig::default();
        let cfg = ForestConfig { n_trees: 1, mtry: Some(4), tree_config, bootstrap: false };
        let forest = fit_forest(&v, &cfg, 3).unwrap();
        let tree = fit_tree(&v, &tree_config, None).unwrap();
        for row in v.rows() {
            assert_eq!(forest.predict(row).unwrap().class, tree.predict(row).unwrap().class);
        }
    }

    #[test]
    fn importance_normalised_and_finds_signal() {
        let v = noisy_view(3, 120);
        let forest = fit_forest(&v, &ForestConfig { n_trees: 100, ..Default::default() }, 4).unwrap();
        let imp = forest.importance();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(imp.iter().all(|&x| x >= 0.0));
        assert_eq!(forest.top_features(1), vec!["f0".to_string()]);
    }

    #[test]
    fn vote_share_is_exact_fraction() {
        let v = noisy_view(4, 40);
        let forest = fit_forest(&v, &ForestConfig { n_trees: 7, ..Default::default() }, 5).unwrap();
        for row in v.rows() {
            let pred = forest.predict(row).unwrap();
            let votes = forest.trees.iter().filter(|t| t.predict(row).unwrap().class).count();
            assert_eq!(pred.prob_fall, votes as f64 / 7.0);
            assert_eq!(pred.class, votes >= 4);
        }
    }

    #[test]
    fn no_split_gives_zero_importance() {
        let v = FeatureView::new(vec!["a".into()], vec![vec![1.0]; 4], vec![true, false, true, false]).unwrap();
        let forest = fit_forest(&v, &ForestConfig { n_trees: 5, ..Default::default() }, 1).unwrap();
        assert_eq!(forest.importance(), &[0.0]);
        assert!(forest.top_features(5).is_empty());
    }

    #[test]
    fn importance_csv_sorted() {
        let v = noisy_view(5, 80);
        let forest = fit_forest(&v, &ForestConfig { n_trees: 30, ..Default::default() }, 2).unwrap();
        let mut buf = Vec::new();
        forest.write_importance_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let vals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(vals.len(), 4);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mtry_defaults() {
        let cfg = ForestConfig::default();
        assert_eq!(cfg.resolved_mtry(1), 1);
        assert_eq!(cfg.resolved_mtry(4), 2);
        assert_eq!(cfg.resolved_mtry(42), 6);
        assert_eq!(ForestConfig { mtry: Some(99), ..cfg }.resolved_mtry(3), 3);
    }
}
