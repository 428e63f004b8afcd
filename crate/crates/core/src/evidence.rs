//! Probe observations and assessor notes backing verdicts.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogSnapshot, Conformance, Platform, SlotOrigin, SortCapability};
use crate::scoring::{SampledObservation, VerdictValue};
use crate::web::{AccessibilityReport, HealthSweep, LoadMeasurement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub evidence_id: String,
    pub captured_at: DateTime<Utc>,
    pub sub_dimension_ids: Vec<String>,
    #[serde(flatten)]
    pub body: EvidenceBody,
}

impl Evidence {
    pub fn kind(&self) -> EvidenceKind {
        self.body.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    LoadMeasurement,
    HealthSweep,
    Accessibility,
    CatalogSnapshotRef,
    SampledObservation,
    EndpointProbe,
    ManualNote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EvidenceBody {
    LoadMeasurement(LoadEvidence),
    HealthSweep(HealthSweep),
    Accessibility(AccessibilityReport),
    CatalogSnapshotRef(CatalogEvidence),
    SampledObservation(SampledEvidence),
    EndpointProbe(EndpointEvidence),
    ManualNote { text: String },
}

impl EvidenceBody {
    pub fn kind(&self) -> EvidenceKind {
        match self {
            EvidenceBody::LoadMeasurement(_) => EvidenceKind::LoadMeasurement,
            EvidenceBody::HealthSweep(_) => EvidenceKind::HealthSweep,
            EvidenceBody::Accessibility(_) => EvidenceKind::Accessibility,
            EvidenceBody::CatalogSnapshotRef(_) => EvidenceKind::CatalogSnapshotRef,
            EvidenceBody::SampledObservation(_) => EvidenceKind::SampledObservation,
            EvidenceBody::EndpointProbe(_) => EvidenceKind::EndpointProbe,
            EvidenceBody::ManualNote { .. } => EvidenceKind::ManualNote,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadEvidence {
    pub url: String,
    /// Absent when every attempt failed.
    pub measurement: Option<LoadMeasurement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEvidence {
    pub endpoint: Option<String>,
    pub platform: Platform,
    pub sort_capability: SortCapability,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<CatalogSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotEvidence {
    pub dataset_id: String,
    pub title: String,
    pub origin: SlotOrigin,
    pub conformance: Conformance,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledEvidence {
    pub criterion: String,
    pub slots: Vec<SlotEvidence>,
    pub threshold: usize,
    /// Present once every slot is determined.
    pub observation: Option<SampledObservation>,
}

impl SampledEvidence {
    pub fn undetermined_slots(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.conformance == Conformance::Undetermined)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointFinding {
    pub sub_dimension_id: String,
    /// `None` when the probe could not decide.
    pub suggestion: Option<VerdictValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointEvidence {
    pub findings: Vec<EndpointFinding>,
}
