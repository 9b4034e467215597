use std::collections::BTreeMap;
use std::fmt;

use super::{CohortError, ItemSchema, Part, ParticipantRecord};

/// Sums of item scores used as aggregate predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Aggregate {
    Subtotal1,
    Subtotal2,
    Subtotal3,
    Subtotal4,
    Total,
    Tremor,
    Rigidity,
    Bradykinesia,
    Pigd,
}

impl Aggregate {
    pub const ALL: [Aggregate; 9] = [
        Aggregate::Subtotal1,
        Aggregate::Subtotal2,
        Aggregate::Subtotal3,
        Aggregate::Subtotal4,
        Aggregate::Total,
        Aggregate::Tremor,
        Aggregate::Rigidity,
        Aggregate::Bradykinesia,
        Aggregate::Pigd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Subtotal1 => "subtotal1",
            Aggregate::Subtotal2 => "subtotal2",
            Aggregate::Subtotal3 => "subtotal3",
            Aggregate::Subtotal4 => "subtotal4",
            Aggregate::Total => "total",
            Aggregate::Tremor => "tremor",
            Aggregate::Rigidity => "rigidity",
            Aggregate::Bradykinesia => "bradykinesia",
            Aggregate::Pigd => "pigd",
        }
    }

    pub fn subtotal(part: Part) -> Aggregate {
        match part {
            Part::I => Aggregate::Subtotal1,
            Part::II => Aggregate::Subtotal2,
            Part::III => Aggregate::Subtotal3,
            Part::IV => Aggregate::Subtotal4,
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateSpec {
    pub name: Aggregate,
    pub item_ids: Vec<u8>,
}

impl AggregateSpec {
    /// Subtotals and total follow the schema's parts; the composites use fixed item ids.
    pub fn reference(schema: &ItemSchema) -> Vec<AggregateSpec> {
        let fixed = |name, ids: &[u8]| AggregateSpec { name, item_ids: ids.to_vec() };
        let mut specs: Vec<AggregateSpec> = Part::ALL
            .iter()
            .map(|&p| AggregateSpec { name: Aggregate::subtotal(p), item_ids: schema.part_ids(p) })
            .collect();
        specs.push(AggregateSpec { name: Aggregate::Total, item_ids: schema.ids() });
        specs.push(fixed(Aggregate::Tremor, &[20, 21]));
        specs.push(fixed(Aggregate::Rigidity, &[22]));
        specs.push(fixed(Aggregate::Bradykinesia, &[23, 25, 26, 31]));
        specs.push(fixed(Aggregate::Pigd, &[13, 14, 15, 27, 28, 29, 30]));
        specs
    }
}

/// Sums member item scores for each spec.
pub fn derive_aggregates(
    record: &ParticipantRecord,
    specs: &[AggregateSpec],
) -> Result<BTreeMap<Aggregate, f64>, CohortError> {
    specs
        .iter()
        .map(|spec| {
            let total = spec.item_ids.iter().try_fold(0u32, |acc, &id| {
                record.score(id).map(|s| acc + u32::from(s)).ok_or(CohortError::UnknownItem(id))
            })?;
            Ok((spec.name, f64::from(total)))
        })
        .collect()
}
