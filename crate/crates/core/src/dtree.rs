//! Binary classification trees grown by recursive partitioning.
//!
//! Splits are `x[feature] < threshold` (left) with thresholds at midpoints between adjacent
//! distinct observed values. The split maximising the weighted impurity decrease is taken;
//! ties go to the lowest feature index, then the lowest threshold.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cohort::FeatureView;

/// Impurity differences below this are treated as ties.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("row has {got} values, tree expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot fit a tree to an empty view")]
    EmptyView,
    #[error("invalid tree configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl SplitCriterion {
    /// Impurity of a node with the given class counts.
    pub fn impurity(self, n_pos: usize, n_neg: usize) -> Result<f64, TreeError> {
        let n = n_pos + n_neg;
        if n == 0 {
            return Err(TreeError::EmptyNode);
        }
        let p = n_pos as f64 / n as f64;
        let q = n_neg as f64 / n as f64;
        Ok(match self {
            SplitCriterion::Gini => 1.0 - p * p - q * q,
            SplitCriterion::Entropy => -[p, q].iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>(),
        })
    }
}

/// Gini impurity `1 - p^2 - (1-p)^2` with `p = n_pos / (n_pos + n_neg)`.
pub fn gini_impurity(n_pos: usize, n_neg: usize) -> Result<f64, TreeError> {
    SplitCriterion::Gini.impurity(n_pos, n_neg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub min_node_size: usize,
    pub min_impurity_decrease: f64,
    pub max_depth: usize,
    pub criterion: SplitCriterion,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { min_node_size: 5, min_impurity_decrease: 0.01, max_depth: 5, criterion: SplitCriterion::Gini }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_node_size < 1 {
            return Err(TreeError::InvalidConfig("min_node_size must be at least 1".into()));
        }
        if self.max_depth < 1 {
            return Err(TreeError::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_impurity_decrease.is_nan() || self.min_impurity_decrease < 0.0 {
            return Err(TreeError::InvalidConfig("min_impurity_decrease must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitRule {
    pub fn goes_left(&self, row: &[f64]) -> bool {
        row[self.feature] < self.threshold
    }
}

/// Best split found at a node, with its weighted impurity decrease.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub rule: SplitRule,
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub class: bool,
    pub n_fall: usize,
    pub n_nonfall: usize,
}

impl Leaf {
    fn from_counts(n_fall: usize, n_nonfall: usize) -> Leaf {
        // Ties go to the non-faller class.
        Leaf { class: n_fall > n_nonfall, n_fall, n_nonfall }
    }

    pub fn total(&self) -> usize {
        self.n_fall + self.n_nonfall
    }

    /// Share of the majority class.
    pub fn purity(&self) -> f64 {
        self.n_fall.max(self.n_nonfall) as f64 / self.total() as f64
    }

    pub fn prob_fall(&self) -> f64 {
        self.n_fall as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub rule: SplitRule,
    pub n_fall: usize,
    pub n_nonfall: usize,
    /// Weighted impurity decrease achieved at this node.
    pub decrease: f64,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(Leaf),
    Split(Split),
}

impl TreeNode {
    pub fn counts(&self) -> (usize, usize) {
        match self {
            TreeNode::Leaf(l) => (l.n_fall, l.n_nonfall),
            TreeNode::Split(s) => (s.n_fall, s.n_nonfall),
        }
    }

    pub fn leaf_for(&self, row: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf(l) => return l,
                TreeNode::Split(s) => node = if s.rule.goes_left(row) { &s.left } else { &s.right },
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf(l) => out.push(l),
                TreeNode::Split(s) => {
                    stack.push(&s.right);
                    stack.push(&s.left);
                }
            }
        }
        out
    }

    /// Depth of the deepest leaf; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    /// Calls `f(feature, n_node, decrease)` for each internal node.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, usize, f64)) {
        if let TreeNode::Split(s) = self {
            f(s.rule.feature, s.n_fall + s.n_nonfall, s.decrease);
            s.left.for_each_split(f);
            s.right.for_each_split(f);
        }
    }
}

/// Class and faller probability for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: bool,
    pub prob_fall: f64,
}

/// A fitted tree together with the feature names it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub feature_names: Vec<String>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> Result<Prediction, TreeError> {
        predict_tree(self, row)
    }

    /// Feature indices used by at least one split, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used = vec![false; self.feature_names.len()];
        self.root.for_each_split(&mut |f, _, _| used[f] = true);
        (0..used.len()).filter(|&i| used[i]).collect()
    }

    /// Indented rule listing: each internal node prints its rule with a `yes`/`no` branch,
    /// leaves print class, purity and counts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let (f, nf) = self.root.counts();
        let _ = writeln!(out, "root (n={}, fall={f}, nonfall={nf})", f + nf);
        render_node(&self.root, &self.feature_names, 1, &mut out);
        out
    }
}

fn render_node(node: &TreeNode, names: &[String], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match node {
        TreeNode::Leaf(l) => {
            let class = if l.class { "faller" } else { "non-faller" };
            let _ =
                writeln!(out, "{pad}-> {class} purity={:.3} (fall={}, nonfall={})", l.purity(), l.n_fall, l.n_nonfall);
        }
        TreeNode::Split(s) => {
            let name = &names[s.rule.feature];
            let _ = writeln!(out, "{pad}{name} < {}: yes", s.rule.threshold);
            render_node(&s.left, names, indent + 1, out);
            let _ = writeln!(out, "{pad}{name} < {}: no", s.rule.threshold);
            render_node(&s.right, names, indent + 1, out);
        }
    }
}

fn class_counts(labels: &[bool], idx: &[usize]) -> (usize, usize) {
    let pos = idx.iter().filter(|&&i| labels[i]).count();
    (pos, idx.len() - pos)
}

/// True when `(decrease, feature, threshold)` should replace the current best.
fn better(candidate: (f64, usize, f64), best: Option<&SplitChoice>) -> bool {
    let Some(best) = best else { return true };
    let (d, f, t) = candidate;
    if d > best.decrease + TIE_EPS {
        return true;
    }
    if d < best.decrease - TIE_EPS {
        return false;
    }
    (f, t) < (best.rule.feature, best.rule.threshold)
}

/// Best admissible split over the rows in `idx` (duplicates allowed, as in a bootstrap
/// sample). Splits leaving fewer than `min_node_size` rows in either child are not
/// considered.
pub(crate) fn best_split_indexed(
    rows: &[Vec<f64>],
    labels: &[bool],
    idx: &[usize],
    candidates: &[usize],
    config: &TreeConfig,
) -> Option<SplitChoice> {
    let n = idx.len();
    if n < 2 || candidates.is_empty() {
        return None;
    }
    let (pos, neg) = class_counts(labels, idx);
    let parent = config.criterion.impurity(pos, neg).ok()?;
    let nf = n as f64;
    let mut best: Option<SplitChoice> = None;
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(n);
    for &feature in candidates {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (rows[i][feature], labels[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0usize;
        for k in 0..n - 1 {
            if pairs[k].1 {
                left_pos += 1;
            }
            let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < config.min_node_size || n_right < config.min_node_size {
                continue;
            }
            let left_neg = n_left - left_pos;
            let right_pos = pos - left_pos;
            let right_neg = n_right - right_pos;
            let child = (n_left as f64 / nf) * config.criterion.impurity(left_pos, left_neg).ok()?
                + (n_right as f64 / nf) * config.criterion.impurity(right_pos, right_neg).ok()?;
            let decrease = (parent - child).max(0.0);
            let threshold = lo + (hi - lo) / 2.0;
            if better((decrease, feature, threshold), best.as_ref()) {
                best = Some(SplitChoice { rule: SplitRule { feature, threshold }, decrease });
            }
        }
    }
    best.filter(|b| b.decrease >= config.min_impurity_decrease)
}

/// Best split over all rows of `rows`, or `None` when no admissible split reaches
/// `min_impurity_decrease`.
pub fn best_split(
    rows: &[Vec<f64>],
    labels: &[bool],
    candidates: &[usize],
    config: &TreeConfig,
) -> Option<SplitChoice> {
    let idx: Vec<usize> = (0..rows.len()).collect();
    best_split_indexed(rows, labels, &idx, candidates, config)
}

/// Grows a tree on the rows listed in `idx`. `candidates` is called once per node that may
/// split and returns the feature indices to search there.
pub(crate) fn grow(
    rows: &[Vec<f64>],
    labels: &[bool],
    idx: &[usize],
    config: &TreeConfig,
    candidates: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    grow_node(rows, labels, idx.to_vec(), 0, config, candidates)
}

fn grow_node(
    rows: &[Vec<f64>],
    labels: &[bool],
    idx: Vec<usize>,
    depth: usize,
    config: &TreeConfig,
    candidates: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    let (pos, neg) = class_counts(labels, &idx);
    let leaf = || TreeNode::Leaf(Leaf::from_counts(pos, neg));
    if pos == 0 || neg == 0 || depth >= config.max_depth || idx.len() < 2 * config.min_node_size {
        return leaf();
    }
    let feats = candidates();
    let Some(choice) = best_split_indexed(rows, labels, &idx, &feats, config) else {
        return leaf();
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| choice.rule.goes_left(&rows[i]));
    TreeNode::Split(Split {
        rule: choice.rule,
        n_fall: pos,
        n_nonfall: neg,
        decrease: choice.decrease,
        left: Box::new(grow_node(rows, labels, left, depth + 1, config, candidates)),
        right: Box::new(grow_node(rows, labels, right, depth + 1, config, candidates)),
    })
}

/// Fits a tree to every row of `view`, searching `candidates` (all features when `None`)
/// at each node.
pub fn fit_tree(
    view: &FeatureView,
    config: &TreeConfig,
    candidates: Option<&[usize]>,
) -> Result<DecisionTree, TreeError> {
    config.validate()?;
    if view.is_empty() {
        return Err(TreeError::EmptyView);
    }
    let feats: Vec<usize> = match candidates {
        Some(c) => c.to_vec(),
        None => (0..view.n_features()).collect(),
    };
    if let Some(&bad) = feats.iter().find(|&&f| f >= view.n_features()) {
        return Err(TreeError::InvalidConfig(format!("candidate feature {bad} out of range")));
    }
    let idx: Vec<usize> = (0..view.n_rows()).collect();
    let root = grow(view.rows(), view.labels(), &idx, config, &mut || feats.clone());
    Ok(DecisionTree { root, feature_names: view.feature_names().to_vec() })
}

pub fn predict_tree(tree: &DecisionTree, row: &[f64]) -> Result<Prediction, TreeError> {
    if row.len() != tree.feature_names.len() {
        return Err(TreeError::DimensionMismatch { expected: tree.feature_names.len(), got: row.len() });
    }
    let leaf = tree.root.leaf_for(row);
    Ok(Prediction { class: leaf.class, prob_fall: leaf.prob_fall() })
}
