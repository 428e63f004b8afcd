//! Per-dataset conformance rules for the sampled sub-dimensions.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::frequency::check_update_frequency;
use super::{CatalogError, DatasetRecord, PageFeature, Sample};
use crate::exec::Execution;
use crate::framework::{FrameworkSpec, SAMPLED_IDS};
use crate::scoring::{SampledObservation, SlotConformance};

/// Formats counted as machine readable for `e1`.
pub const MACHINE_READABLE_FORMATS: [&str; 13] = [
    "CSV", "JSON", "XML", "RDF", "XLSX", "GEOJSON", "PARQUET", "TTL", "NT", "JSON-LD", "ODS", "TSV", "XLS",
];

pub const DEFAULT_BASIC_METADATA: [&str; 5] = ["title", "description", "publisher", "license", "modified"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conformance {
    Conforms,
    NotConforming,
    /// The harvest cannot tell; an assessor must look at the dataset page.
    Undetermined,
}

impl Conformance {
    fn from_bool(b: bool) -> Self {
        if b {
            Conformance::Conforms
        } else {
            Conformance::NotConforming
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub dataset_id: String,
    pub criterion: String,
    pub conformance: Conformance,
    pub detail: String,
}

/// Parameters shared by all checks of one assessment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckRules {
    pub reference_date: NaiveDate,
    pub basic_metadata_fields: Vec<String>,
}

impl CheckRules {
    pub fn new(reference_date: NaiveDate) -> Self {
        CheckRules {
            reference_date,
            basic_metadata_fields: DEFAULT_BASIC_METADATA.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Picks up the `e2` field list when the framework overrides it.
    pub fn with_framework(mut self, spec: &FrameworkSpec) -> Self {
        if let Some(fields) = spec.sub_dimension("e2").and_then(|s| s.required_fields.clone()) {
            self.basic_metadata_fields = fields;
        }
        self
    }

    pub fn check(&self, record: &DatasetRecord, criterion: &str) -> Result<CheckOutcome, CatalogError> {
        let outcome = |conformance, detail: String| CheckOutcome {
            dataset_id: record.dataset_id.clone(),
            criterion: criterion.to_string(),
            conformance,
            detail,
        };
        let counter = |value: Option<u64>, what: &str| match value {
            Some(n) => outcome(Conformance::Conforms, format!("{what} shown ({n})")),
            None => outcome(Conformance::Undetermined, format!("platform does not expose {what}")),
        };
        let feature = |f: PageFeature, what: &str| match record.page_features.get(&f) {
            Some(&b) => outcome(Conformance::from_bool(b), format!("{what}: {}", if b { "present" } else { "absent" })),
            None => outcome(Conformance::Undetermined, format!("{what} not observable from catalog metadata")),
        };

        let result = match criterion {
            "d2" => counter(record.views, "view count"),
            "d3" => counter(record.downloads, "download count"),
            "d4" => counter(record.reuse_count, "re-use count"),
            "d5" => feature(PageFeature::ReuseDisplay, "re-use display"),
            "d7" => feature(PageFeature::Preview, "data preview"),
            "d8" => feature(PageFeature::Visualization, "visualization tools"),
            "d10" => feature(PageFeature::VisualizationDownload, "visualization download"),
            "d11" => feature(PageFeature::VulgarizedContent, "lay explanation"),
            "e7" => feature(PageFeature::QualityRating, "quality rating"),
            "e1" => {
                let mr: Vec<&str> = record
                    .formats
                    .iter()
                    .map(String::as_str)
                    .filter(|f| MACHINE_READABLE_FORMATS.contains(f))
                    .collect();
                if mr.is_empty() {
                    outcome(Conformance::NotConforming, format!("no machine-readable format in {:?}", record.formats))
                } else {
                    outcome(Conformance::Conforms, format!("machine-readable: {}", mr.join(", ")))
                }
            }
            "e2" => {
                let mut missing = Vec::new();
                for field in &self.basic_metadata_fields {
                    if !field_present(record, field)? {
                        missing.push(field.as_str());
                    }
                }
                if missing.is_empty() {
                    outcome(Conformance::Conforms, "all basic metadata present".into())
                } else {
                    outcome(Conformance::NotConforming, format!("missing: {}", missing.join(", ")))
                }
            }
            "e3" => match record.update_frequency.as_deref().map(str::trim) {
                Some(f) if !f.is_empty() => outcome(Conformance::Conforms, format!("frequency {f}")),
                _ => outcome(Conformance::NotConforming, "no update frequency declared".into()),
            },
            "e4" => check_update_frequency(record, self.reference_date),
            "f10" => {
                if record.tags.is_empty() {
                    outcome(Conformance::NotConforming, "no tags".into())
                } else {
                    outcome(Conformance::Conforms, format!("{} tags", record.tags.len()))
                }
            }
            "f11" => {
                let linked: Vec<_> = record.resources.iter().filter(|r| r.download_url.is_some()).collect();
                if linked.iter().any(|r| r.reachable == Some(true)) {
                    outcome(Conformance::Conforms, "download link reachable".into())
                } else if linked.is_empty() {
                    outcome(Conformance::NotConforming, "no download links".into())
                } else if linked.iter().all(|r| r.reachable == Some(false)) {
                    outcome(Conformance::NotConforming, "no download link reachable".into())
                } else {
                    outcome(Conformance::Undetermined, "download links not probed".into())
                }
            }
            other => return Err(CatalogError::NotSampled(other.to_string())),
        };
        Ok(result)
    }
}

fn field_present(record: &DatasetRecord, field: &str) -> Result<bool, CatalogError> {
    let filled = |s: Option<&str>| s.is_some_and(|v| !v.trim().is_empty());
    Ok(match field {
        "title" => filled(Some(&record.title)),
        "description" => filled(Some(&record.description)),
        "publisher" => filled(record.publisher.as_deref()),
        "license" => filled(record.license.as_deref()),
        "modified" => record.modified.is_some(),
        "update_frequency" => filled(record.update_frequency.as_deref()),
        "tags" => !record.tags.is_empty(),
        "spatial_coverage" => filled(record.spatial_coverage.as_deref()),
        "temporal_coverage" => record.temporal_coverage.is_some(),
        other => return Err(CatalogError::UnknownField(other.to_string())),
    })
}

/// Result for one slot after any manual review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "value")]
pub enum SlotResult {
    Conforms,
    NotConforming,
    Undetermined,
    /// Decided by the assessor.
    Resolved(bool),
    /// Dropped from the denominator by the assessor.
    Excluded,
}

impl From<Conformance> for SlotResult {
    fn from(c: Conformance) -> Self {
        match c {
            Conformance::Conforms => SlotResult::Conforms,
            Conformance::NotConforming => SlotResult::NotConforming,
            Conformance::Undetermined => SlotResult::Undetermined,
        }
    }
}

/// Folds per-slot results into an observation ready for scoring.
pub fn aggregate_sampled(
    sample: &Sample,
    criterion: &str,
    results: &[SlotResult],
) -> Result<SampledObservation, CatalogError> {
    if results.len() != sample.len() {
        return Err(CatalogError::SlotCount { expected: sample.len(), got: results.len() });
    }
    let unresolved: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r, SlotResult::Undetermined))
        .map(|(i, _)| i)
        .collect();
    if !unresolved.is_empty() {
        return Err(CatalogError::Unresolved(unresolved));
    }
    let mut per_slot = Vec::with_capacity(results.len());
    let mut excluded = Vec::new();
    for (i, (slot, result)) in sample.slots.iter().zip(results).enumerate() {
        let conforms = match result {
            SlotResult::Conforms | SlotResult::Resolved(true) => true,
            SlotResult::NotConforming | SlotResult::Resolved(false) => false,
            SlotResult::Excluded => {
                excluded.push(i);
                continue;
            }
            SlotResult::Undetermined => unreachable!("rejected above"),
        };
        per_slot.push(SlotConformance { dataset_id: slot.dataset.dataset_id.clone(), conforms });
    }
    if per_slot.is_empty() {
        return Err(CatalogError::AllExcluded);
    }
    let mut obs = SampledObservation::from_slots(criterion, per_slot);
    obs.excluded_slots = excluded;
    Ok(obs)
}

/// Outcomes of one criterion over every slot of a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionOutcomes {
    pub criterion: String,
    pub outcomes: Vec<CheckOutcome>,
}

impl CriterionOutcomes {
    pub fn slot_results(&self) -> Vec<SlotResult> {
        self.outcomes.iter().map(|o| o.conformance.into()).collect()
    }
}

/// Runs every sampled criterion over every slot.
pub fn run_sampled_checks(rules: &CheckRules, sample: &Sample) -> Result<Vec<CriterionOutcomes>, CatalogError> {
    run_sampled_checks_with(Execution::default(), rules, sample)
}

pub fn run_sampled_checks_with(
    exec: Execution,
    rules: &CheckRules,
    sample: &Sample,
) -> Result<Vec<CriterionOutcomes>, CatalogError> {
    exec.map(&SAMPLED_IDS, |criterion| {
        let outcomes = sample
            .slots
            .iter()
            .map(|slot| rules.check(&slot.dataset, criterion))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CriterionOutcomes { criterion: criterion.to_string(), outcomes })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Resource, SampleSlot, SlotOrigin};
    use crate::scoring::{evaluate_sampled, VerdictValue};

    fn rules() -> CheckRules {
        CheckRules::new(NaiveDate::from_ymd_opt(2024, 3, 15).unwrap())
    }

    fn with_formats(formats: &[&str]) -> DatasetRecord {
        DatasetRecord {
            dataset_id: "x".into(),
            formats: formats.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn e1_machine_readable() {
        let r = rules();
        assert_eq!(r.check(&with_formats(&["CSV", "PDF"]), "e1").unwrap().conformance, Conformance::Conforms);
        assert_eq!(r.check(&with_formats(&["PDF"]), "e1").unwrap().conformance, Conformance::NotConforming);
        assert_eq!(r.check(&with_formats(&[]), "e1").unwrap().conformance, Conformance::NotConforming);
    }

    #[test]
    fn f10_tags() {
        let r = rules();
        let mut rec = with_formats(&[]);
        assert_eq!(r.check(&rec, "f10").unwrap().conformance, Conformance::NotConforming);
        rec.tags = vec!["transport".into()];
        assert_eq!(r.check(&rec, "f10").unwrap().conformance, Conformance::Conforms);
    }

    #[test]
    fn e2_basic_metadata() {
        let r = rules();
        let mut rec = DatasetRecord {
            dataset_id: "x".into(),
            title: "T".into(),
            description: "D".into(),
            publisher: Some("P".into()),
            license: Some("CC-BY-4.0".into()),
            modified: NaiveDate::from_ymd_opt(2024, 1, 1),
            ..Default::default()
        };
        assert_eq!(r.check(&rec, "e2").unwrap().conformance, Conformance::Conforms);
        rec.license = Some("  ".into());
        let out = r.check(&rec, "e2").unwrap();
        assert_eq!(out.conformance, Conformance::NotConforming);
        assert!(out.detail.contains("license"));

        let custom = CheckRules { basic_metadata_fields: vec!["title".into()], ..rules() };
        assert_eq!(custom.check(&rec, "e2").unwrap().conformance, Conformance::Conforms);
        let bad = CheckRules { basic_metadata_fields: vec!["colour".into()], ..rules() };
        assert!(matches!(bad.check(&rec, "e2"), Err(CatalogError::UnknownField(_))));
    }

    #[test]
    fn unexposed_signals_are_undetermined() {
        let r = rules();
        let mut rec = with_formats(&[]);
        assert_eq!(r.check(&rec, "d2").unwrap().conformance, Conformance::Undetermined);
        assert_eq!(r.check(&rec, "d7").unwrap().conformance, Conformance::Undetermined);
        rec.views = Some(0);
        rec.page_features.insert(PageFeature::Preview, false);
        assert_eq!(r.check(&rec, "d2").unwrap().conformance, Conformance::Conforms);
        assert_eq!(r.check(&rec, "d7").unwrap().conformance, Conformance::NotConforming);
    }

    #[test]
    fn f11_reachability() {
        let r = rules();
        let res = |url: bool, reachable| Resource {
            format: "CSV".into(),
            download_url: url.then(|| "http://x/y.csv".to_string()),
            reachable,
        };
        let mut rec = with_formats(&[]);
        assert_eq!(r.check(&rec, "f11").unwrap().conformance, Conformance::NotConforming);
        rec.resources = vec![res(true, None)];
        assert_eq!(r.check(&rec, "f11").unwrap().conformance, Conformance::Undetermined);
        rec.resources = vec![res(true, Some(false)), res(true, Some(true))];
        assert_eq!(r.check(&rec, "f11").unwrap().conformance, Conformance::Conforms);
        rec.resources = vec![res(true, Some(false))];
        assert_eq!(r.check(&rec, "f11").unwrap().conformance, Conformance::NotConforming);
    }

    #[test]
    fn unknown_criterion() {
        assert!(matches!(rules().check(&with_formats(&[]), "a1"), Err(CatalogError::NotSampled(_))));
    }

    fn sample(n: usize) -> Sample {
        Sample {
            portal_id: "p".into(),
            slots: (0..n)
                .map(|i| SampleSlot {
                    dataset: DatasetRecord { dataset_id: format!("d{i}"), ..Default::default() },
                    origin: SlotOrigin::FirstDefault,
                })
                .collect(),
        }
    }

    fn results(n: usize, k: usize) -> Vec<SlotResult> {
        (0..n).map(|i| if i < k { SlotResult::Conforms } else { SlotResult::NotConforming }).collect()
    }

    #[test]
    fn aggregate_examples() {
        let obs = aggregate_sampled(&sample(14), "e1", &results(14, 11)).unwrap();
        assert_eq!((obs.sample_size, obs.conforming_count), (14, 11));
        assert_eq!(evaluate_sampled(&obs), Ok(VerdictValue::PASS));

        let obs = aggregate_sampled(&sample(14), "e1", &results(14, 9)).unwrap();
        assert_eq!(evaluate_sampled(&obs), Ok(VerdictValue::FAIL));

        let obs = aggregate_sampled(&sample(5), "e1", &results(5, 4)).unwrap();
        assert_eq!((obs.sample_size, obs.conforming_count), (5, 4));
        assert_eq!(evaluate_sampled(&obs), Ok(VerdictValue::PASS));
    }

    #[test]
    fn aggregate_resolution() {
        let mut res = results(14, 10);
        res[0] = SlotResult::Undetermined;
        res[3] = SlotResult::Undetermined;
        assert!(matches!(aggregate_sampled(&sample(14), "d2", &res), Err(CatalogError::Unresolved(v)) if v == [0, 3]));
        res[0] = SlotResult::Resolved(true);
        res[3] = SlotResult::Excluded;
        let obs = aggregate_sampled(&sample(14), "d2", &res).unwrap();
        assert_eq!((obs.sample_size, obs.conforming_count), (13, 9));
        assert_eq!(obs.excluded_slots, [3]);
        assert!(matches!(aggregate_sampled(&sample(3), "d2", &results(2, 1)), Err(CatalogError::SlotCount { .. })));
        let all_out = vec![SlotResult::Excluded; 2];
        assert!(matches!(aggregate_sampled(&sample(2), "d2", &all_out), Err(CatalogError::AllExcluded)));
    }

    #[test]
    fn every_sampled_criterion_runs() {
        let out = run_sampled_checks(&rules(), &sample(3)).unwrap();
        assert_eq!(out.len(), SAMPLED_IDS.len());
        assert!(out.iter().all(|c| c.outcomes.len() == 3));
        let seq = run_sampled_checks_with(Execution::Sequential, &rules(), &sample(3)).unwrap();
        assert_eq!(out, seq);
    }
}
