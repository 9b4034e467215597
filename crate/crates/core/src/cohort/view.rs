use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use super::{derive_aggregates, Aggregate, AggregateSpec, CohortDataset, CohortError, Part};

/// Predictor subsets evaluated for every method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Updrs1,
    Updrs2,
    Updrs3,
    Updrs4,
    AllItems,
    Subtotal,
    Composite,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Updrs1,
        Scheme::Updrs2,
        Scheme::Updrs3,
        Scheme::Updrs4,
        Scheme::AllItems,
        Scheme::Subtotal,
        Scheme::Composite,
    ];

    /// Position in [`Scheme::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Updrs1 => "updrs1",
            Scheme::Updrs2 => "updrs2",
            Scheme::Updrs3 => "updrs3",
            Scheme::Updrs4 => "updrs4",
            Scheme::AllItems => "all_items",
            Scheme::Subtotal => "subtotal",
            Scheme::Composite => "composite",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

/// Follow-up horizon defining the fall label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizon {
    M6,
    M12,
}

impl Horizon {
    pub const ALL: [Horizon; 2] = [Horizon::M6, Horizon::M12];

    pub fn name(self) -> &'static str {
        match self {
            Horizon::M6 => "m6",
            Horizon::M12 => "m12",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "m6" | "6" => Ok(Horizon::M6),
            "m12" | "12" => Ok(Horizon::M12),
            _ => Err(format!("unknown horizon {s:?}")),
        }
    }
}

/// Dense design: one row per participant, one column per named feature, and the binary
/// fall label for the chosen horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView {
    scheme: Option<Scheme>,
    horizon: Option<Horizon>,
    ids: Vec<String>,
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl FeatureView {
    /// Builds a view from raw parts. Participant ids default to `r1`, `r2`, ...
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self, CohortError> {
        let ids = (1..=rows.len()).map(|i| format!("r{i}")).collect();
        Self::with_ids(ids, feature_names, rows, labels)
    }

    pub fn with_ids(
        ids: Vec<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
    ) -> Result<Self, CohortError> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(CohortError::InvalidView(format!(
                "{} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(CohortError::InvalidView(format!("duplicate feature {dup:?}")));
        }
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != feature_names.len()) {
            return Err(CohortError::InvalidView(format!(
                "row {} has {} values for {} features",
                i + 1,
                rows[i].len(),
                feature_names.len()
            )));
        }
        Ok(FeatureView { scheme: None, horizon: None, ids, feature_names, rows, labels })
    }

    pub fn scheme(&self) -> Option<Scheme> {
        self.scheme
    }

    pub fn horizon(&self) -> Option<Horizon> {
        self.horizon
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_fallers(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Copy of the view keeping only the listed rows, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> FeatureView {
        FeatureView {
            scheme: self.scheme,
            horizon: self.horizon,
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Copy of the view with row `held_out` removed.
    pub fn without_row(&self, held_out: usize) -> FeatureView {
        let keep: Vec<usize> = (0..self.n_rows()).filter(|&i| i != held_out).collect();
        self.subset_rows(&keep)
    }
}

fn aggregate_columns(scheme: Scheme) -> Option<&'static [Aggregate]> {
    match scheme {
        Scheme::Subtotal => {
            Some(&[Aggregate::Subtotal1, Aggregate::Subtotal2, Aggregate::Subtotal3, Aggregate::Subtotal4])
        }
        Scheme::Composite => Some(&[Aggregate::Tremor, Aggregate::Rigidity, Aggregate::Bradykinesia, Aggregate::Pigd]),
        _ => None,
    }
}

/// Projects the cohort onto a scheme's predictors with labels for `horizon`.
///
/// Item schemes use `item_<id>` columns in schema order; aggregate schemes use the
/// aggregate names (`subtotal1`..`subtotal4`, `tremor`, `rigidity`, `bradykinesia`, `pigd`).
pub fn build_view(dataset: &CohortDataset, scheme: Scheme, horizon: Horizon) -> Result<FeatureView, CohortError> {
    let schema = dataset.schema();
    let records = dataset.records();
    let (names, rows): (Vec<String>, Vec<Vec<f64>>) = match aggregate_columns(scheme) {
        None => {
            let ids: Vec<u8> = match scheme {
                Scheme::Updrs1 => schema.part_ids(Part::I),
                Scheme::Updrs2 => schema.part_ids(Part::II),
                Scheme::Updrs3 => schema.part_ids(Part::III),
                Scheme::Updrs4 => schema.part_ids(Part::IV),
                _ => schema.ids(),
            };
            let names = ids.iter().map(|&id| super::item_column(id)).collect();
            let rows = records.iter().map(|r| ids.iter().map(|&id| f64::from(r.item_scores[&id])).collect()).collect();
            (names, rows)
        }
        Some(aggs) => {
            let specs: Vec<AggregateSpec> =
                AggregateSpec::reference(schema).into_iter().filter(|s| aggs.contains(&s.name)).collect();
            let names = aggs.iter().map(|a| a.name().to_string()).collect();
            let rows = records
                .iter()
                .map(|r| {
                    let values = derive_aggregates(r, &specs)?;
                    Ok(aggs.iter().map(|a| values[a]).collect())
                })
                .collect::<Result<_, CohortError>>()?;
            (names, rows)
        }
    };
    let labels = records
        .iter()
        .map(|r| match horizon {
            Horizon::M6 => r.fell_6m,
            Horizon::M12 => r.fell_12m,
        })
        .collect();
    let ids = records.iter().map(|r| r.participant_id.clone()).collect();
    let mut view = FeatureView::with_ids(ids, names, rows, labels)?;
    view.scheme = Some(scheme);
    view.horizon = Some(horizon);
    Ok(view)
}
