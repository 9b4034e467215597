//! Participant data model: item schema, CSV ingestion, derived aggregates, feature views
//! and a seeded synthetic cohort generator.

mod aggregate;
mod csv_io;
mod dataset;
mod schema;
mod synth;
mod view;

pub use aggregate::{derive_aggregates, Aggregate, AggregateSpec};
pub use csv_io::{load_cohort, read_cohort, write_cohort, COHORT_PREFIX_COLUMNS, COHORT_SUFFIX_COLUMNS};
pub use dataset::{CohortDataset, Gender, Living, ParticipantRecord};
pub use schema::{item_column, ItemDef, ItemSchema, Part};
pub use synth::{generate_synthetic, Scenario};
pub use view::{build_view, FeatureView, Horizon, Scheme};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohortError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("item {item_id} score out of range at row {row}")]
    OutOfRangeScore { item_id: u8, row: usize },
    #[error("duplicate participant {id:?} at row {row}")]
    DuplicateParticipant { id: String, row: usize },
    #[error("cohort file has no data rows")]
    EmptyFile,
    #[error("invalid value {value:?} in column {column:?} at row {row}")]
    InvalidValue { column: String, row: usize, value: String },
    #[error("record {participant:?} is missing item {item_id}")]
    MissingItem { participant: String, item_id: u8 },
    #[error("unknown item {0}")]
    UnknownItem(u8),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("invalid feature view: {0}")]
    InvalidView(String),
    #[error("cohort must contain at least one participant")]
    EmptyCohort,
    #[error("io error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(String),
}
