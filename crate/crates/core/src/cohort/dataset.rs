use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use super::{CohortError, ItemSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

impl FromStr for Gender {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Living {
    Alone,
    WithFamily,
}

impl fmt::Display for Living {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Living::Alone => "alone",
            Living::WithFamily => "with_family",
        })
    }
}

impl FromStr for Living {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alone" => Ok(Living::Alone),
            "with_family" | "family" => Ok(Living::WithFamily),
            _ => Err(()),
        }
    }
}

/// One participant: baseline demographics, item scores and fall outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub gender: Gender,
    pub age_years: f64,
    pub living: Living,
    pub duration_years: f64,
    pub previous_falls: u32,
    pub hy_score: f64,
    pub item_scores: BTreeMap<u8, u8>,
    pub fell_6m: bool,
    pub fell_12m: bool,
}

impl ParticipantRecord {
    pub fn score(&self, item_id: u8) -> Option<u8> {
        self.item_scores.get(&item_id).copied()
    }

    fn validate(&self, schema: &ItemSchema, row: usize) -> Result<(), CohortError> {
        for item in schema.items() {
            match self.item_scores.get(&item.id) {
                None => {
                    return Err(CohortError::MissingItem { participant: self.participant_id.clone(), item_id: item.id })
                }
                Some(&s) if !item.contains(i64::from(s)) => {
                    return Err(CohortError::OutOfRangeScore { item_id: item.id, row })
                }
                Some(_) => {}
            }
        }
        if let Some(&id) = self.item_scores.keys().find(|id| schema.get(**id).is_none()) {
            return Err(CohortError::UnknownItem(id));
        }
        let bad = |column: &str, value: f64| CohortError::InvalidValue {
            column: column.to_string(),
            row,
            value: value.to_string(),
        };
        if !(0.0..=3.0).contains(&self.hy_score) {
            return Err(bad("hy", self.hy_score));
        }
        if !self.age_years.is_finite() || self.age_years < 0.0 {
            return Err(bad("age", self.age_years));
        }
        if !self.duration_years.is_finite() || self.duration_years < 0.0 {
            return Err(bad("duration", self.duration_years));
        }
        Ok(())
    }
}

/// A validated, immutable cohort. Record order is preserved from the source.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    schema: ItemSchema,
    records: Vec<ParticipantRecord>,
}

impl CohortDataset {
    /// Validates every record against `schema`. Row numbers in errors are 1-based record
    /// positions.
    pub fn new(schema: ItemSchema, records: Vec<ParticipantRecord>) -> Result<Self, CohortError> {
        if records.is_empty() {
            return Err(CohortError::EmptyCohort);
        }
        let mut ids = HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            let row = i + 1;
            if !ids.insert(rec.participant_id.as_str()) {
                return Err(CohortError::DuplicateParticipant { id: rec.participant_id.clone(), row });
            }
            rec.validate(&schema, row)?;
        }
        Ok(CohortDataset { schema, records })
    }

    pub fn schema(&self) -> &ItemSchema {
        &self.schema
    }

    pub fn records(&self) -> &[ParticipantRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
