//! Operations shared by the command line and the HTTP API, so both go
//! through the same store calls and the same scoring.

use chrono::{DateTime, Utc};
use serde::Serialize;

use oda_core::report::{
    LeadersReport, PortalReport, RankingReport, RegionComparison, ReportError, ReportFormat, ShortcomingsReport,
    Thresholds,
};
use oda_core::scoring::{shortcoming_stats, ScoringError};
use oda_core::store::{Assessment, PortalProfile, Region, Store, StoreError};
use oda_core::{FrameworkSpec, PortalScore, Verdict};
use oda_probe::{probe_portal, ProbeInputs, ProbeReport, Prober};

#[derive(Debug, thiserror::Error)]
pub enum OpError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("no assessments for framework {0}")]
    NoAssessments(String),
    #[error("unknown report kind {0} (ranking, portal, leaders, shortcomings, regions)")]
    UnknownReport(String),
    #[error("the portal report needs a portal or assessment id")]
    MissingTarget,
}

impl From<ScoringError> for OpError {
    fn from(e: ScoringError) -> Self {
        OpError::Store(e.into())
    }
}

/// An assessment id, or a portal id standing for its latest assessment.
pub fn resolve_assessment(store: &Store, target: &str) -> Result<Assessment, OpError> {
    if let Ok(a) = store.assessment(target) {
        return Ok(a);
    }
    store.portal(target).map_err(|_| StoreError::UnknownAssessment(target.to_string()))?;
    store
        .assessments_for(target)?
        .pop()
        .ok_or_else(|| OpError::Store(StoreError::UnknownAssessment(format!("no assessment for portal {target}"))))
}

pub fn score(store: &Store, a: &Assessment) -> Result<PortalScore, OpError> {
    Ok(a.score(store.framework(&a.framework_version)?)?)
}

/// Effective verdicts and score after a change, as returned by the API.
#[derive(Debug, Clone, Serialize)]
pub struct AssessmentView {
    pub assessment_id: String,
    pub portal_id: String,
    pub framework_version: String,
    pub status: oda_core::store::AssessmentStatus,
    pub effective_verdicts: std::collections::BTreeMap<String, Verdict>,
    pub score: PortalScore,
    pub recorded: usize,
    pub missing: usize,
}

pub fn view(store: &Store, a: &Assessment) -> Result<AssessmentView, OpError> {
    let spec = store.framework(&a.framework_version)?;
    let effective_verdicts = a.effective_verdicts();
    Ok(AssessmentView {
        assessment_id: a.assessment_id.clone(),
        portal_id: a.portal_id.clone(),
        framework_version: a.framework_version.clone(),
        status: a.status,
        recorded: effective_verdicts.len(),
        missing: a.missing_count(spec),
        score: a.score(spec)?,
        effective_verdicts,
    })
}

/// Latest assessment of every portal assessed under `spec`, with its score.
pub fn latest_scored(
    store: &Store,
    spec: &FrameworkSpec,
) -> Result<Vec<(PortalProfile, Assessment, PortalScore)>, OpError> {
    let mut out = Vec::new();
    for portal in store.list_portals(None)? {
        let Some(a) =
            store.assessments_for(&portal.portal_id)?.into_iter().rev().find(|a| a.framework_version == spec.version)
        else {
            continue;
        };
        let s = a.score(spec)?;
        out.push((portal, a, s));
    }
    if out.is_empty() {
        return Err(OpError::NoAssessments(spec.version.clone()));
    }
    Ok(out)
}

pub fn ranking(store: &Store, spec: &FrameworkSpec, thresholds: Thresholds, now: DateTime<Utc>) -> Result<RankingReport, OpError> {
    let scores: Vec<PortalScore> = latest_scored(store, spec)?.into_iter().map(|(_, _, s)| s).collect();
    Ok(RankingReport::build(spec, &scores, thresholds, now)?)
}

pub struct ReportRequest<'a> {
    pub kind: &'a str,
    pub target: Option<&'a str>,
    pub format: ReportFormat,
    pub thresholds: Thresholds,
    pub regions: &'a [Region],
}

/// Renders a report; returns the document and the warnings to show.
pub fn render_report(
    store: &Store,
    spec: &FrameworkSpec,
    req: &ReportRequest<'_>,
    now: DateTime<Utc>,
) -> Result<(String, Vec<String>), OpError> {
    match req.kind {
        "ranking" => Ok((ranking(store, spec, req.thresholds, now)?.render(req.format), Vec::new())),
        "portal" => {
            let a = resolve_assessment(store, req.target.ok_or(OpError::MissingTarget)?)?;
            let spec = store.framework(&a.framework_version)?;
            let name = store.portal(&a.portal_id).map(|p| p.name).unwrap_or_else(|_| a.portal_id.clone());
            Ok((PortalReport::build(spec, &a, &name, now)?.render(req.format), Vec::new()))
        }
        "leaders" => {
            let scores: Vec<PortalScore> = latest_scored(store, spec)?.into_iter().map(|(_, _, s)| s).collect();
            Ok((LeadersReport::build(spec, &scores, now)?.render(req.format), Vec::new()))
        }
        "shortcomings" => {
            let sets: Vec<_> = latest_scored(store, spec)?.into_iter().map(|(_, a, _)| a.verdict_set()).collect();
            let stats = shortcoming_stats(spec, &sets)?;
            Ok((ShortcomingsReport::build(spec, &stats, now).render(req.format), Vec::new()))
        }
        "regions" => {
            let scores: Vec<(Region, PortalScore)> =
                latest_scored(store, spec)?.into_iter().map(|(p, _, s)| (p.region, s)).collect();
            let cmp = RegionComparison::build(spec, &scores, req.regions, now)?;
            let warnings = cmp.warnings.clone();
            Ok((cmp.render(spec, req.format), warnings))
        }
        other => Err(OpError::UnknownReport(other.to_string())),
    }
}

/// Documents supplied instead of, or next to, live probing.
#[derive(Debug, Clone, Default)]
pub struct ProbeDocuments {
    pub catalog: Option<String>,
    pub accessibility: Option<String>,
}

/// Probes the portal of an assessment and stores evidence and automatic
/// verdicts in one write. Manual verdicts keep precedence.
pub async fn probe_into(
    store: &Store,
    prober: &Prober,
    assessment: &Assessment,
    docs: &ProbeDocuments,
    now: DateTime<Utc>,
) -> Result<(Assessment, ProbeReport), OpError> {
    if assessment.is_finalized() {
        return Err(StoreError::Finalized.into());
    }
    let portal = store.portal(&assessment.portal_id)?;
    let spec = store.framework(&assessment.framework_version)?;
    let inputs = ProbeInputs {
        assessment_id: &assessment.assessment_id,
        portal: &portal,
        spec,
        reference_date: assessment.reference_date,
        catalog_file: docs.catalog.as_deref(),
        accessibility_report: docs.accessibility.as_deref(),
        now,
    };
    let report = probe_portal(prober, &inputs).await;
    let (a, ()) = store.update_assessment(&assessment.assessment_id, now, |a, _| {
        if a.is_finalized() {
            return Err(StoreError::Finalized);
        }
        for e in &report.evidence {
            a.evidence.insert(e.evidence_id.clone(), e.clone());
        }
        a.verdict_log.extend(report.verdicts.iter().cloned());
        Ok(())
    })?;
    Ok((a, report))
}

/// The open assessment of a portal under the default framework, created
/// when there is none.
pub fn open_or_create(store: &Store, portal_id: &str, now: DateTime<Utc>) -> Result<Assessment, OpError> {
    let version = store.default_framework().version.clone();
    match store.open_assessment(portal_id, &version)? {
        Some(a) => Ok(a),
        None => Ok(store.create_assessment(portal_id, &version, now)?),
    }
}
