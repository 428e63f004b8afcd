//! Harvested catalog metadata, the dataset sample, and per-dataset checks.

pub mod checks;
pub mod ckan;
pub mod dcat;
pub mod frequency;
mod record;
mod sample;

pub use checks::{
    aggregate_sampled, run_sampled_checks, run_sampled_checks_with, CheckOutcome, CheckRules, Conformance,
    CriterionOutcomes, SlotResult,
};
pub use frequency::{check_update_frequency, Frequency};
pub use record::{normalize_format, parse_manual_import, DatasetRecord, DateInterval, PageFeature, Resource};
pub use sample::{
    draw_sample, CatalogSnapshot, Listing, Platform, Sample, SampleSlot, SlotOrigin, SortCapability, SortKey,
    SAMPLE_SIZE,
};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("malformed catalog document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed catalog record {record}: {message}")]
    Record { record: String, message: String },
    #[error("malformed catalog: {0}")]
    Document(String),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("listing \"{0}\" is missing or too short to draw the sample")]
    MissingListing(SortKey),
    #[error("criterion {0} is not evaluated on the dataset sample")]
    NotSampled(String),
    #[error("unknown metadata field \"{0}\"")]
    UnknownField(String),
    #[error("expected {expected} slot results, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error("undetermined slots need review: {0:?}")]
    Unresolved(Vec<usize>),
    #[error("every slot was excluded")]
    AllExcluded,
}
