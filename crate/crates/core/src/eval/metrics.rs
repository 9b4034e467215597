//! Confusion counts, threshold selection and ROC curves over scored participants.

use std::fmt;

use super::EvalError;

/// One participant's held-out score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub id: String,
    pub label: bool,
    pub score: f64,
}

impl ScoredRow {
    pub fn new(id: impl Into<String>, label: bool, score: f64) -> Self {
        ScoredRow { id: id.into(), label, score }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// An exact `num / den` ratio; `den == 0` means undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// The ratio as a float, NaN when undefined.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            f64::NAN
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn sensitivity_ratio(&self) -> Ratio {
        Ratio { num: self.tp, den: self.tp + self.fn_ }
    }

    pub fn specificity_ratio(&self) -> Ratio {
        Ratio { num: self.tn, den: self.tn + self.fp }
    }

    pub fn accuracy_ratio(&self) -> Ratio {
        Ratio { num: self.tp + self.tn, den: self.total() }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            accuracy: self.accuracy_ratio().value(),
            sensitivity: self.sensitivity_ratio().value(),
            specificity: self.specificity_ratio().value(),
        }
    }
}

/// Accuracy, sensitivity and specificity; NaN where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Formats a metric for CSV output, writing `NA` for undefined values.
pub fn fmt_metric(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        v.to_string()
    }
}

/// Counts with `predicted = score > threshold`.
pub fn confusion_at(scores: &[ScoredRow], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for s in scores {
        match (s.label, s.score > threshold) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// Maximise `sensitivity + specificity - 1`.
    #[default]
    Youden,
    /// Minimise `|sensitivity - specificity|`, then maximise Youden's J.
    Balance,
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdRule::Youden => "youden",
            ThresholdRule::Balance => "balance",
        })
    }
}

fn check_scores(scores: &[ScoredRow]) -> Result<(), EvalError> {
    if let Some(s) = scores.iter().find(|s| !s.score.is_finite()) {
        return Err(EvalError::NonFiniteScore(s.id.clone()));
    }
    let pos = scores.iter().filter(|s| s.label).count();
    if pos == 0 || pos == scores.len() {
        return Err(EvalError::SingleClass);
    }
    Ok(())
}

/// `+inf`, midpoints between adjacent distinct scores (descending), then `-inf`.
pub fn candidate_thresholds(scores: &[ScoredRow]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.iter().map(|s| s.score).collect();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(f64::INFINITY);
    out.extend(distinct.windows(2).map(|w| w[1] + (w[0] - w[1]) / 2.0));
    out.push(f64::NEG_INFINITY);
    out
}

/// Threshold chosen by `rule` over the candidate set; ties go to the smallest threshold.
pub fn choose_threshold(scores: &[ScoredRow], rule: ThresholdRule) -> Result<f64, EvalError> {
    check_scores(scores)?;
    let mut best: Option<(f64, f64, f64)> = None;
    // Candidates ascending so that only strict improvements move the choice.
    for t in candidate_thresholds(scores).into_iter().rev() {
        let m = confusion_at(scores, t).metrics();
        let j = m.sensitivity + m.specificity - 1.0;
        let key = match rule {
            ThresholdRule::Youden => (j, 0.0),
            ThresholdRule::Balance => (-(m.sensitivity - m.specificity).abs(), j),
        };
        let improves = match best {
            None => true,
            Some((k0, k1, _)) => key.0 > k0 + 1e-12 || (key.0 >= k0 - 1e-12 && key.1 > k1 + 1e-12),
        };
        if improves {
            best = Some((key.0, key.1, t));
        }
    }
    Ok(best.expect("candidate set is never empty").2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sorted by threshold descending, from (0, 0) to (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

pub fn roc_and_auc(scores: &[ScoredRow]) -> Result<RocCurve, EvalError> {
    check_scores(scores)?;
    let points = candidate_thresholds(scores)
        .into_iter()
        .map(|t| {
            let c = confusion_at(scores, t);
            RocPoint { threshold: t, fpr: c.fp as f64 / (c.fp + c.tn) as f64, tpr: c.tp as f64 / (c.tp + c.fn_) as f64 }
        })
        .collect();
    Ok(RocCurve { points, auc: auc_concordance(scores)? })
}

/// Share of (faller, non-faller) pairs ranked correctly, ties counting one half.
pub fn auc_concordance(scores: &[ScoredRow]) -> Result<f64, EvalError> {
    check_scores(scores)?;
    let mut pos: Vec<f64> = scores.iter().filter(|s| s.label).map(|s| s.score).collect();
    let mut neg: Vec<f64> = scores.iter().filter(|s| !s.label).map(|s| s.score).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    // Twice the concordance count, accumulated in integers.
    let mut twice: u64 = 0;
    let (mut lo, mut hi) = (0usize, 0usize);
    for &p in &pos {
        while lo < neg.len() && neg[lo] < p {
            lo += 1;
        }
        while hi < neg.len() && neg[hi] <= p {
            hi += 1;
        }
        twice += 2 * lo as u64 + (hi - lo) as u64;
    }
    Ok(twice as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Trapezoid area under the swept ROC points.
pub fn auc_trapezoid(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}
