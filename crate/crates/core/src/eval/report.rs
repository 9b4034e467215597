use std::io::{self, Write};

use super::metrics::{choose_threshold, confusion_at, fmt_metric, roc_and_auc};
use super::{ConfusionCounts, EvalError, Metrics, RocCurve, ScoredRow, ThresholdRule};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantResult {
    pub id: String,
    pub label: bool,
    pub score: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub per_participant: Vec<ParticipantResult>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub roc: RocCurve,
    pub chosen_threshold: f64,
    pub rule: ThresholdRule,
}

/// Chooses the threshold on `scores` by `rule` and classifies every participant with it.
pub fn evaluate(scores: &[ScoredRow], rule: ThresholdRule) -> Result<EvaluationReport, EvalError> {
    let threshold = choose_threshold(scores, rule)?;
    let roc = roc_and_auc(scores)?;
    let counts = confusion_at(scores, threshold);
    let per_participant = scores
        .iter()
        .map(|s| ParticipantResult { id: s.id.clone(), label: s.label, score: s.score, predicted: s.score > threshold })
        .collect();
    Ok(EvaluationReport { per_participant, counts, metrics: counts.metrics(), roc, chosen_threshold: threshold, rule })
}

/// `id,label,score,predicted`, one row per participant.
pub fn write_report_csv<W: Write>(report: &EvaluationReport, mut w: W) -> io::Result<()> {
    writeln!(w, "id,label,score,predicted")?;
    for p in &report.per_participant {
        writeln!(w, "{},{},{},{}", p.id, u8::from(p.label), p.score, u8::from(p.predicted))?;
    }
    Ok(())
}

/// Single-row summary: counts, metrics, AUC and the chosen threshold.
pub fn write_metrics_csv<W: Write>(report: &EvaluationReport, mut w: W) -> io::Result<()> {
    let c = report.counts;
    let m = report.metrics;
    writeln!(w, "tp,fp,tn,fn,accuracy,sensitivity,specificity,auc,threshold,rule")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        fmt_metric(m.accuracy),
        fmt_metric(m.sensitivity),
        fmt_metric(m.specificity),
        report.roc.auc,
        report.chosen_threshold,
        report.rule
    )
}

pub fn write_roc_csv<W: Write>(roc: &RocCurve, mut w: W) -> io::Result<()> {
    writeln!(w, "threshold,fpr,tpr")?;
    for p in &roc.points {
        writeln!(w, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    Ok(())
}
