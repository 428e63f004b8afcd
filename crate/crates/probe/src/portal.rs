//! One probe run over a portal: every automated measurement, turned into
//! evidence and automatic verdicts.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use oda_core::catalog::{
    draw_sample, parse_manual_import, run_sampled_checks, CatalogSnapshot, CheckRules, Conformance, Listing, Platform,
    Sample, SortCapability, SortKey, SAMPLE_SIZE,
};
use oda_core::evidence::{CatalogEvidence, Evidence, EvidenceBody, SampledEvidence, SlotEvidence};
use oda_core::framework::{Method, SAMPLED_IDS};
use oda_core::scoring::{evaluate_sampled, sampled_threshold};
use oda_core::store::PortalProfile;
use oda_core::web::{heuristic_accessibility, ingest_accessibility_report};
use oda_core::{FrameworkSpec, Verdict, VerdictSource};

use crate::catalog::PlatformDetection;
use crate::Prober;

pub struct ProbeInputs<'a> {
    pub assessment_id: &'a str,
    pub portal: &'a PortalProfile,
    pub spec: &'a FrameworkSpec,
    pub reference_date: NaiveDate,
    /// Manual-import catalog document, used instead of harvesting.
    pub catalog_file: Option<&'a str>,
    /// Accessibility report document from an external checker.
    pub accessibility_report: Option<&'a str>,
    pub now: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum ProbeStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub portal_id: String,
    pub probes: BTreeMap<String, ProbeStatus>,
    pub evidence: Vec<Evidence>,
    pub verdicts: Vec<Verdict>,
    /// Sub-dimensions that received an automatic verdict.
    pub auto_filled: Vec<String>,
    /// Automatable sub-dimensions left for the assessor.
    pub needs_review: Vec<String>,
    pub warnings: Vec<String>,
}

impl ProbeReport {
    pub fn any_succeeded(&self) -> bool {
        self.probes.values().any(|s| *s == ProbeStatus::Ok)
    }
}

struct Builder<'a> {
    inputs: &'a ProbeInputs<'a>,
    report: ProbeReport,
}

impl<'a> Builder<'a> {
    fn evidence_id(&self, slug: &str) -> String {
        format!("{}/{slug}", self.inputs.assessment_id)
    }

    fn add_evidence(&mut self, slug: &str, ids: &[&str], body: EvidenceBody) -> String {
        let id = self.evidence_id(slug);
        self.report.evidence.push(Evidence {
            evidence_id: id.clone(),
            captured_at: self.inputs.now,
            sub_dimension_ids: ids.iter().map(|s| s.to_string()).collect(),
            body,
        });
        id
    }

    fn auto(&mut self, sub: &str, pass: bool, evidence: &str, note: String) {
        let mut v = Verdict::new(sub, pass, VerdictSource::Auto, self.inputs.now);
        v.evidence_refs.push(evidence.to_string());
        v.note = Some(note);
        self.report.verdicts.push(v);
        self.report.auto_filled.push(sub.to_string());
    }

    fn status(&mut self, probe: &str, status: ProbeStatus) {
        self.report.probes.insert(probe.to_string(), status);
    }
}

fn manual_snapshot(inputs: &ProbeInputs<'_>, doc: &str) -> Result<CatalogSnapshot, String> {
    let records = parse_manual_import(doc, inputs.now.date_naive()).map_err(|e| e.to_string())?;
    let total = records.len();
    Ok(CatalogSnapshot {
        portal_id: inputs.portal.portal_id.clone(),
        harvested_at: inputs.now,
        platform: Platform::ManualImport,
        sort_capability: SortCapability::None,
        listings: BTreeMap::from([(SortKey::Default, Listing::full(records))]),
        total_dataset_count: total,
        insufficient: total < SAMPLE_SIZE,
    })
}

/// Runs every automated probe against one portal. Nothing is written; the
/// caller stores the returned evidence and verdicts.
pub async fn probe_portal(prober: &Prober, inputs: &ProbeInputs<'_>) -> ProbeReport {
    let mut b = Builder {
        inputs,
        report: ProbeReport {
            portal_id: inputs.portal.portal_id.clone(),
            probes: BTreeMap::new(),
            evidence: Vec::new(),
            verdicts: Vec::new(),
            auto_filled: Vec::new(),
            needs_review: Vec::new(),
            warnings: Vec::new(),
        },
    };
    let homepage = inputs.portal.homepage.as_str();

    // c1 first and alone, so other traffic does not skew the timing
    let load = prober.measure_load_time(homepage).await;
    let measurement = load.measurement.clone();
    let ev = b.add_evidence("load-time", &["c1"], EvidenceBody::LoadMeasurement(load));
    match measurement {
        Some(m) => {
            b.auto("c1", m.passed, &ev, format!("median {} ms over {:?}", m.median_ms, m.attempts));
            b.status("load_time", ProbeStatus::Ok);
        }
        None => b.status("load_time", ProbeStatus::Failed("every attempt failed".into())),
    }

    // catalog harvest and the sampled checks
    let detection = if inputs.catalog_file.is_some() {
        PlatformDetection {
            platform: Platform::ManualImport,
            sort_capability: SortCapability::None,
            endpoint: None,
            dataset_count: None,
            warnings: Vec::new(),
        }
    } else {
        prober.detect_platform(&inputs.portal.catalog_endpoints).await
    };
    let snapshot = match inputs.catalog_file {
        Some(doc) => manual_snapshot(inputs, doc),
        None if detection.platform == Platform::ManualImport => Err(detection.warnings.join("; ")),
        None => prober
            .fetch_catalog_snapshot(&inputs.portal.portal_id, &detection, inputs.now)
            .await
            .map_err(|e| e.to_string()),
    };
    b.report.warnings.extend(detection.warnings.iter().cloned());
    let sample = match &snapshot {
        Ok(s) => match draw_sample(s) {
            Ok(sample) => Some(sample),
            Err(e) => {
                b.report.warnings.push(e.to_string());
                None
            }
        },
        Err(_) => None,
    };
    b.add_evidence(
        "catalog",
        &SAMPLED_IDS,
        EvidenceBody::CatalogSnapshotRef(CatalogEvidence {
            endpoint: detection.endpoint.clone(),
            platform: detection.platform,
            sort_capability: snapshot.as_ref().map(|s| s.sort_capability).unwrap_or(detection.sort_capability),
            warnings: detection.warnings.clone(),
            snapshot: snapshot.as_ref().ok().cloned(),
        }),
    );
    match &snapshot {
        Ok(_) => b.status("catalog", ProbeStatus::Ok),
        Err(e) => b.status("catalog", ProbeStatus::Failed(e.clone())),
    }
    let sample = match sample {
        Some(mut s) => {
            prober.check_downloads(&mut s).await;
            Some(s)
        }
        None => None,
    };
    if let Some(sample) = &sample {
        sampled_verdicts(&mut b, sample);
    }

    // c3 health sweep
    let mut pages = vec![homepage.to_string()];
    match (&detection.platform, &detection.endpoint) {
        (Platform::Ckan, Some(base)) => pages.push(format!("{base}/dataset")),
        (Platform::DcatJsonld, Some(url)) => pages.push(url.clone()),
        _ => {}
    }
    if let Some(url) = sample.as_ref().and_then(|s| s.slots.iter().find_map(|slot| slot.dataset.page_url.clone())) {
        pages.push(url);
    }
    let sweep = prober.probe_health(&pages).await;
    let answered = sweep.pages.iter().any(|p| p.status.is_some());
    let passed = sweep.passed();
    let note = if passed {
        format!("{} pages without blocking errors", sweep.pages.len())
    } else {
        sweep.blocking_errors.iter().map(|e| format!("{}: {}", e.url, e.reason)).collect::<Vec<_>>().join("; ")
    };
    let ev = b.add_evidence("health", &["c3"], EvidenceBody::HealthSweep(sweep));
    if answered {
        b.auto("c3", passed, &ev, note);
        b.status("health", ProbeStatus::Ok);
    } else {
        b.status("health", ProbeStatus::Failed("no page answered".into()));
    }

    // c4 from an imported report; the heuristic report is evidence only
    match inputs.accessibility_report {
        Some(doc) => match ingest_accessibility_report(doc, inputs.now) {
            Ok(r) => {
                let note = format!("{} score {} with {} critical issues", r.source, r.score, r.critical_issue_count);
                let pass = r.passes();
                let ev = b.add_evidence("accessibility", &["c4"], EvidenceBody::Accessibility(r));
                b.auto("c4", pass, &ev, note);
                b.status("accessibility", ProbeStatus::Ok);
            }
            Err(e) => b.status("accessibility", ProbeStatus::Failed(e.to_string())),
        },
        None => match prober.get(homepage, Some("text/html")).await {
            Ok(f) if f.ok() => {
                let r = heuristic_accessibility(&f.body, homepage, inputs.now);
                b.add_evidence("accessibility", &["c4"], EvidenceBody::Accessibility(r));
                b.status("accessibility", ProbeStatus::Ok);
            }
            Ok(f) => b.status("accessibility", ProbeStatus::Failed(format!("HTTP {}", f.status))),
            Err(e) => b.status("accessibility", ProbeStatus::Failed(e.to_string())),
        },
    }

    // f12, f13
    let endpoints = prober.detect_endpoints(homepage, &detection).await;
    let decided: Vec<(String, bool, String)> = endpoints
        .findings
        .iter()
        .filter_map(|f| f.suggestion.map(|s| (f.sub_dimension_id.clone(), s.passed(), f.detail.clone())))
        .collect();
    let ev = b.add_evidence("endpoints", &["f12", "f13"], EvidenceBody::EndpointProbe(endpoints));
    if decided.is_empty() {
        b.status("endpoints", ProbeStatus::Failed("undetermined".into()));
    } else {
        b.status("endpoints", ProbeStatus::Ok);
    }
    for (sub, pass, detail) in decided {
        b.auto(&sub, pass, &ev, detail);
    }

    let filled = b.report.auto_filled.clone();
    b.report.needs_review = inputs
        .spec
        .sub_dimensions()
        .filter(|s| s.method != Method::Manual && !filled.contains(&s.id))
        .map(|s| s.id.clone())
        .collect();
    b.report
}

fn sampled_verdicts(b: &mut Builder<'_>, sample: &Sample) {
    let rules = CheckRules::new(b.inputs.reference_date).with_framework(b.inputs.spec);
    let outcomes = match run_sampled_checks(&rules, sample) {
        Ok(o) => o,
        Err(e) => {
            b.report.warnings.push(e.to_string());
            return;
        }
    };
    for c in outcomes {
        let slots: Vec<SlotEvidence> = sample
            .slots
            .iter()
            .zip(&c.outcomes)
            .map(|(slot, o)| SlotEvidence {
                dataset_id: slot.dataset.dataset_id.clone(),
                title: slot.dataset.title.clone(),
                origin: slot.origin,
                conformance: o.conformance,
                detail: o.detail.clone(),
            })
            .collect();
        let determined = slots.iter().all(|s| s.conformance != Conformance::Undetermined);
        let observation = if determined {
            oda_core::catalog::aggregate_sampled(sample, &c.criterion, &c.slot_results()).ok()
        } else {
            None
        };
        let evidence = SampledEvidence {
            criterion: c.criterion.clone(),
            slots,
            threshold: sampled_threshold(sample.len()),
            observation: observation.clone(),
        };
        let ev = b.add_evidence(&format!("sampled-{}", c.criterion), &[c.criterion.as_str()], EvidenceBody::SampledObservation(evidence));
        if let Some(obs) = observation {
            if let Ok(v) = evaluate_sampled(&obs) {
                let note = format!(
                    "{}/{} conforming, threshold {}",
                    obs.conforming_count,
                    obs.sample_size,
                    sampled_threshold(obs.sample_size)
                );
                b.auto(&c.criterion, v.passed(), &ev, note);
            }
        }
    }
}
