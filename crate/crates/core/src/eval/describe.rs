use std::io::{self, Write};

use super::stats::{chi_square_2x2, mann_whitney, StatsError};
use crate::cohort::{
    derive_aggregates, Aggregate, AggregateSpec, CohortDataset, Gender, Horizon, Living, ParticipantRecord,
};

#[derive(Debug, Clone, PartialEq)]
pub enum DescribeCell {
    /// Mean and sample standard deviation.
    MeanSd {
        mean: f64,
        sd: f64,
    },
    /// Count and its share of the row total, in percent.
    Count {
        count: usize,
        percent: f64,
    },
    Missing,
}

impl DescribeCell {
    fn render(&self) -> String {
        match self {
            DescribeCell::MeanSd { mean, sd } => format!("{mean:.2} ({sd:.2})"),
            DescribeCell::Count { count, percent } => format!("{count} ({percent:.0}%)"),
            DescribeCell::Missing => "NA".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescribeRow {
    pub variable: String,
    pub fallers: DescribeCell,
    pub non_fallers: DescribeCell,
    pub p: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub horizon: Horizon,
    pub n_fallers: usize,
    pub n_non_fallers: usize,
    pub rows: Vec<DescribeRow>,
}

fn fell(r: &ParticipantRecord, h: Horizon) -> bool {
    match h {
        Horizon::M6 => r.fell_6m,
        Horizon::M12 => r.fell_12m,
    }
}

fn mean_sd(v: &[f64]) -> DescribeCell {
    if v.is_empty() {
        return DescribeCell::Missing;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd =
        if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { f64::NAN };
    DescribeCell::MeanSd { mean, sd }
}

fn quantitative(name: &str, fallers: &[f64], non_fallers: &[f64]) -> DescribeRow {
    let (p, note) = match mann_whitney(fallers, non_fallers) {
        Ok(r) => (Some(r.p_two_sided), None),
        Err(StatsError::DegenerateVariance) => (Some(1.0), Some("DegenerateVariance".to_string())),
        Err(e) => (None, Some(format!("{e:?}"))),
    };
    DescribeRow { variable: name.into(), fallers: mean_sd(fallers), non_fallers: mean_sd(non_fallers), p, note }
}

/// Two rows for a binary variable: counts per group with row percentages, p on the first.
fn categorical(levels: [&str; 2], table: [[u64; 2]; 2]) -> [DescribeRow; 2] {
    let (p, note) = match chi_square_2x2(table) {
        Ok(r) => (Some(r.p), None),
        Err(e) => (None, Some(format!("{e:?}"))),
    };
    let cell = |row: [u64; 2], k: usize| {
        let total = row[0] + row[1];
        let percent = if total == 0 { f64::NAN } else { 100.0 * row[k] as f64 / total as f64 };
        DescribeCell::Count { count: row[k] as usize, percent }
    };
    [
        DescribeRow { variable: levels[0].into(), fallers: cell(table[0], 0), non_fallers: cell(table[0], 1), p, note },
        DescribeRow {
            variable: levels[1].into(),
            fallers: cell(table[1], 0),
            non_fallers: cell(table[1], 1),
            p: None,
            note: None,
        },
    ]
}

/// Faller versus non-faller summary of demographics and disease measures at one horizon.
pub fn describe_cohort(dataset: &CohortDataset, horizon: Horizon) -> CohortSummary {
    let records = dataset.records();
    let (f, nf): (Vec<&ParticipantRecord>, Vec<&ParticipantRecord>) = records.iter().partition(|r| fell(r, horizon));
    let count = |group: &[&ParticipantRecord], pred: &dyn Fn(&ParticipantRecord) -> bool| {
        group.iter().filter(|r| pred(r)).count() as u64
    };
    let mut rows = Vec::new();
    let male = |r: &ParticipantRecord| r.gender == Gender::Male;
    let female = |r: &ParticipantRecord| r.gender == Gender::Female;
    rows.extend(categorical(
        ["Male", "Female"],
        [[count(&f, &male), count(&nf, &male)], [count(&f, &female), count(&nf, &female)]],
    ));
    let values = |group: &[&ParticipantRecord], get: &dyn Fn(&ParticipantRecord) -> f64| -> Vec<f64> {
        group.iter().map(|r| get(r)).collect()
    };
    rows.push(quantitative("Age", &values(&f, &|r| r.age_years), &values(&nf, &|r| r.age_years)));
    let alone = |r: &ParticipantRecord| r.living == Living::Alone;
    let family = |r: &ParticipantRecord| r.living == Living::WithFamily;
    rows.extend(categorical(
        ["Alone", "With family"],
        [[count(&f, &alone), count(&nf, &alone)], [count(&f, &family), count(&nf, &family)]],
    ));

    let specs = AggregateSpec::reference(dataset.schema());
    let aggregates = |group: &[&ParticipantRecord]| -> Vec<Option<std::collections::BTreeMap<Aggregate, f64>>> {
        group.iter().map(|r| derive_aggregates(r, &specs).ok()).collect()
    };
    let (af, anf) = (aggregates(&f), aggregates(&nf));
    let order = [
        (Aggregate::Subtotal1, "Subtotal 1"),
        (Aggregate::Subtotal2, "Subtotal 2"),
        (Aggregate::Subtotal3, "Subtotal 3"),
        (Aggregate::Subtotal4, "Subtotal 4"),
        (Aggregate::Total, "Total"),
        (Aggregate::Tremor, "Tremor"),
        (Aggregate::Rigidity, "Rigidity"),
        (Aggregate::Pigd, "PIGD"),
        (Aggregate::Bradykinesia, "Bradykinesia"),
    ];
    for (agg, label) in order {
        let pick = |a: &[Option<std::collections::BTreeMap<Aggregate, f64>>]| -> Option<Vec<f64>> {
            a.iter().map(|m| m.as_ref().map(|m| m[&agg])).collect()
        };
        match (pick(&af), pick(&anf)) {
            (Some(x), Some(y)) => rows.push(quantitative(label, &x, &y)),
            _ => rows.push(DescribeRow {
                variable: label.into(),
                fallers: DescribeCell::Missing,
                non_fallers: DescribeCell::Missing,
                p: None,
                note: Some("UnknownItem".into()),
            }),
        }
    }
    rows.push(quantitative("Duration", &values(&f, &|r| r.duration_years), &values(&nf, &|r| r.duration_years)));
    let prev = |r: &ParticipantRecord| f64::from(r.previous_falls);
    rows.push(quantitative("Previous falls", &values(&f, &prev), &values(&nf, &prev)));
    CohortSummary { horizon, n_fallers: f.len(), n_non_fallers: nf.len(), rows }
}

/// `variable,fallers,non_fallers,p,note` with cells formatted as `mean (sd)` or `n (pct%)`.
pub fn write_describe_csv<W: Write>(summary: &CohortSummary, mut w: W) -> io::Result<()> {
    writeln!(w, "variable,fallers,non_fallers,p,note")?;
    for r in &summary.rows {
        let p = r.p.map_or_else(|| "NA".to_string(), |p| format!("{p:.4}"));
        writeln!(
            w,
            "{},{},{},{},{}",
            r.variable,
            r.fallers.render(),
            r.non_fallers.render(),
            p,
            r.note.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}
