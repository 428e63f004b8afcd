//! File-backed persistence of portals and assessments.
//!
//! Layout under the store root:
//!
//! ```text
//! portals/<portal_id>.json
//! assessments/<assessment_id>.json
//! frameworks/<version>.json      (optional, besides the bundled default)
//! ```
//!
//! Every write goes to a temporary file in the same directory and is renamed
//! over the target. Writes to one assessment are serialized by a per-id lock.
//! The verdict log is append-only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::evidence::Evidence;
use crate::framework::{builtin_framework, load_framework, FrameworkError, FrameworkSpec};
use crate::scoring::{score_total, PortalScore, ScoringError, Verdict, VerdictSet};

const EXPORT_FORMAT: &str = "oda-assessment";
const EXPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt file {path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error("unknown portal {0}")]
    UnknownPortal(String),
    #[error("portal {0} already exists")]
    DuplicatePortal(String),
    #[error("invalid portal profile: {0}")]
    InvalidPortal(String),
    #[error("unknown assessment {0}")]
    UnknownAssessment(String),
    #[error("assessment {0} already exists")]
    DuplicateAssessment(String),
    #[error("portal {portal} already has an open assessment {assessment} for framework {version}")]
    OpenAssessmentExists { portal: String, version: String, assessment: String },
    #[error("assessment finalized")]
    Finalized,
    #[error("assessment incomplete: {0} sub-dimensions without a verdict")]
    Incomplete(usize),
    #[error("unknown sub-dimension {0}")]
    UnknownSubDimension(String),
    #[error("evidence {0} not found in assessment")]
    DanglingEvidence(String),
    #[error("framework version {requested} is not installed (available: {available})")]
    UnknownFramework { requested: String, available: String },
    #[error("invalid framework file {path}: {source}")]
    Framework { path: PathBuf, source: FrameworkError },
    #[error("invalid assessment document: {0}")]
    Validation(String),
}

impl StoreError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
        move |source| StoreError::Io { path: path.to_path_buf(), source }
    }
}

impl From<ScoringError> for StoreError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::UnknownSubDimension(id) => StoreError::UnknownSubDimension(id),
            other => StoreError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "EU")]
    Eu,
    #[serde(rename = "GCC")]
    Gcc,
    #[serde(rename = "other")]
    Other,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Eu => "EU",
            Region::Gcc => "GCC",
            Region::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        match s.to_ascii_lowercase().as_str() {
            "eu" => Some(Region::Eu),
            "gcc" => Some(Region::Gcc),
            "other" => Some(Region::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortalProfile {
    pub portal_id: String,
    pub name: String,
    #[serde(default)]
    pub country: String,
    pub region: Region,
    pub homepage: String,
    #[serde(default)]
    pub catalog_endpoints: Vec<String>,
    #[serde(default)]
    pub notes: String,
}

impl PortalProfile {
    pub fn validate(&self) -> Result<(), StoreError> {
        if !is_slug(&self.portal_id) {
            return Err(StoreError::InvalidPortal(format!(
                "portal id \"{}\" must be a non-empty slug of [a-z0-9_-]",
                self.portal_id
            )));
        }
        if self.name.trim().is_empty() {
            return Err(StoreError::InvalidPortal("name is empty".into()));
        }
        Ok(())
    }
}

fn is_slug(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentStatus {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub assessment_id: String,
    pub portal_id: String,
    pub framework_version: String,
    pub status: AssessmentStatus,
    /// Reference date for update-frequency checks; the creation date unless
    /// set explicitly.
    pub reference_date: NaiveDate,
    pub verdict_log: Vec<Verdict>,
    pub evidence: BTreeMap<String, Evidence>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl Assessment {
    /// The verdict in force for each sub-dimension: the latest manual or
    /// override entry if any exists, otherwise the latest automatic one.
    pub fn effective_verdicts(&self) -> BTreeMap<String, Verdict> {
        let mut effective: BTreeMap<String, Verdict> = BTreeMap::new();
        for v in &self.verdict_log {
            let replace = match effective.get(&v.sub_dimension_id) {
                None => true,
                Some(current) => v.source.is_authoritative() || !current.source.is_authoritative(),
            };
            if replace {
                effective.insert(v.sub_dimension_id.clone(), v.clone());
            }
        }
        effective
    }

    pub fn verdict_set(&self) -> VerdictSet {
        VerdictSet {
            portal_id: self.portal_id.clone(),
            framework_version: self.framework_version.clone(),
            verdicts: self.effective_verdicts(),
        }
    }

    pub fn score(&self, spec: &FrameworkSpec) -> Result<PortalScore, ScoringError> {
        score_total(spec, &self.verdict_set())
    }

    pub fn missing_count(&self, spec: &FrameworkSpec) -> usize {
        let eff = self.effective_verdicts();
        spec.sub_dimensions().filter(|s| !eff.contains_key(&s.id)).count()
    }

    pub fn is_finalized(&self) -> bool {
        self.status == AssessmentStatus::Complete
    }

    fn check_references(&self, spec: &FrameworkSpec) -> Result<(), StoreError> {
        for v in &self.verdict_log {
            if spec.sub_dimension(&v.sub_dimension_id).is_none() {
                return Err(StoreError::UnknownSubDimension(v.sub_dimension_id.clone()));
            }
            if let Some(r) = v.evidence_refs.iter().find(|r| !self.evidence.contains_key(*r)) {
                return Err(StoreError::DanglingEvidence(r.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct ExportDocument {
    format: String,
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    portal: Option<PortalProfile>,
    assessment: Assessment,
}

pub struct Store {
    root: PathBuf,
    frameworks: Vec<FrameworkSpec>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Store {
    /// Opens (creating if needed) a store directory. Framework files under
    /// `frameworks/` are loaded next to the bundled default.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for sub in ["portals", "assessments", "frameworks"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(StoreError::io(&dir))?;
        }
        let mut frameworks = vec![builtin_framework()];
        let fw_dir = root.join("frameworks");
        for path in json_files(&fw_dir)? {
            let doc = fs::read_to_string(&path).map_err(StoreError::io(&path))?;
            let spec = load_framework(&doc).map_err(|source| StoreError::Framework { path: path.clone(), source })?;
            if !frameworks.iter().any(|f| f.version == spec.version) {
                frameworks.push(spec);
            }
        }
        Ok(Store { root, frameworks, locks: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn frameworks(&self) -> &[FrameworkSpec] {
        &self.frameworks
    }

    pub fn framework(&self, version: &str) -> Result<&FrameworkSpec, StoreError> {
        self.frameworks.iter().find(|f| f.version == version).ok_or_else(|| StoreError::UnknownFramework {
            requested: version.to_string(),
            available: self.frameworks.iter().map(|f| f.version.as_str()).collect::<Vec<_>>().join(", "),
        })
    }

    /// The bundled default framework.
    pub fn default_framework(&self) -> &FrameworkSpec {
        &self.frameworks[0]
    }

    fn portal_path(&self, id: &str) -> PathBuf {
        self.root.join("portals").join(format!("{id}.json"))
    }

    fn assessment_path(&self, id: &str) -> PathBuf {
        self.root.join("assessments").join(format!("{id}.json"))
    }

    pub fn add_portal(&self, profile: &PortalProfile) -> Result<(), StoreError> {
        profile.validate()?;
        let path = self.portal_path(&profile.portal_id);
        if path.exists() {
            return Err(StoreError::DuplicatePortal(profile.portal_id.clone()));
        }
        write_json(&path, profile)
    }

    pub fn portal(&self, id: &str) -> Result<PortalProfile, StoreError> {
        let path = self.portal_path(id);
        if !is_slug(id) || !path.exists() {
            return Err(StoreError::UnknownPortal(id.to_string()));
        }
        read_json(&path)
    }

    /// Portals ordered by id, optionally restricted to one region.
    pub fn list_portals(&self, region: Option<Region>) -> Result<Vec<PortalProfile>, StoreError> {
        let mut out: Vec<PortalProfile> = json_files(&self.root.join("portals"))?
            .iter()
            .map(|p| read_json(p))
            .collect::<Result<_, _>>()?;
        out.retain(|p| region.is_none_or(|r| p.region == r));
        out.sort_by(|a, b| a.portal_id.cmp(&b.portal_id));
        Ok(out)
    }

    pub fn assessment(&self, id: &str) -> Result<Assessment, StoreError> {
        let path = self.assessment_path(id);
        if id.contains(['/', '\\']) || !path.exists() {
            return Err(StoreError::UnknownAssessment(id.to_string()));
        }
        read_json(&path)
    }

    /// All assessments ordered by creation time, then id.
    pub fn list_assessments(&self) -> Result<Vec<Assessment>, StoreError> {
        let mut out: Vec<Assessment> = json_files(&self.root.join("assessments"))?
            .iter()
            .map(|p| read_json(p))
            .collect::<Result<_, _>>()?;
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.assessment_id.cmp(&b.assessment_id)));
        Ok(out)
    }

    pub fn assessments_for(&self, portal_id: &str) -> Result<Vec<Assessment>, StoreError> {
        let mut all = self.list_assessments()?;
        all.retain(|a| a.portal_id == portal_id);
        Ok(all)
    }

    pub fn open_assessment(&self, portal_id: &str, version: &str) -> Result<Option<Assessment>, StoreError> {
        Ok(self
            .assessments_for(portal_id)?
            .into_iter()
            .find(|a| a.framework_version == version && !a.is_finalized()))
    }

    /// The most recent assessment of each portal.
    pub fn latest_assessments(&self) -> Result<Vec<Assessment>, StoreError> {
        let mut latest: BTreeMap<String, Assessment> = BTreeMap::new();
        for a in self.list_assessments()? {
            latest.insert(a.portal_id.clone(), a);
        }
        Ok(latest.into_values().collect())
    }

    pub fn create_assessment(
        &self,
        portal_id: &str,
        framework_version: &str,
        now: DateTime<Utc>,
    ) -> Result<Assessment, StoreError> {
        self.portal(portal_id)?;
        self.framework(framework_version)?;
        let lock = self.lock_for(&format!("portal:{portal_id}"));
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(open) = self.open_assessment(portal_id, framework_version)? {
            return Err(StoreError::OpenAssessmentExists {
                portal: portal_id.to_string(),
                version: framework_version.to_string(),
                assessment: open.assessment_id,
            });
        }
        let n = self.assessments_for(portal_id)?.len() + 1;
        let mut assessment_id = format!("{portal_id}-{n}");
        let mut bump = n;
        while self.assessment_path(&assessment_id).exists() {
            bump += 1;
            assessment_id = format!("{portal_id}-{bump}");
        }
        let a = Assessment {
            assessment_id,
            portal_id: portal_id.to_string(),
            framework_version: framework_version.to_string(),
            status: AssessmentStatus::InProgress,
            reference_date: now.date_naive(),
            verdict_log: Vec::new(),
            evidence: BTreeMap::new(),
            created_at: now,
            updated_at: now,
        };
        write_json(&self.assessment_path(&a.assessment_id), &a)?;
        Ok(a)
    }

    fn lock_for(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(key.to_string()).or_default().clone()
    }

    /// Read-modify-write of one assessment under its lock.
    pub fn update_assessment<T>(
        &self,
        id: &str,
        now: DateTime<Utc>,
        f: impl FnOnce(&mut Assessment, &FrameworkSpec) -> Result<T, StoreError>,
    ) -> Result<(Assessment, T), StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut a = self.assessment(id)?;
        let spec = self.framework(&a.framework_version)?;
        let out = f(&mut a, spec)?;
        a.updated_at = now;
        write_json(&self.assessment_path(id), &a)?;
        Ok((a, out))
    }

    /// Appends a verdict. Automatic verdicts are logged but never displace a
    /// manual or override verdict.
    pub fn record_verdict(&self, id: &str, verdict: Verdict, now: DateTime<Utc>) -> Result<Assessment, StoreError> {
        self.update_assessment(id, now, |a, spec| {
            if a.is_finalized() {
                return Err(StoreError::Finalized);
            }
            if spec.sub_dimension(&verdict.sub_dimension_id).is_none() {
                return Err(StoreError::UnknownSubDimension(verdict.sub_dimension_id.clone()));
            }
            if let Some(r) = verdict.evidence_refs.iter().find(|r| !a.evidence.contains_key(*r)) {
                return Err(StoreError::DanglingEvidence(r.clone()));
            }
            a.verdict_log.push(verdict);
            Ok(())
        })
        .map(|(a, ())| a)
    }

    /// Stores evidence, replacing an earlier capture with the same id.
    pub fn put_evidence(&self, id: &str, evidence: Evidence, now: DateTime<Utc>) -> Result<Assessment, StoreError> {
        self.update_assessment(id, now, |a, spec| {
            if a.is_finalized() {
                return Err(StoreError::Finalized);
            }
            if let Some(bad) = evidence.sub_dimension_ids.iter().find(|s| spec.sub_dimension(s).is_none()) {
                return Err(StoreError::UnknownSubDimension(bad.clone()));
            }
            a.evidence.insert(evidence.evidence_id.clone(), evidence);
            Ok(())
        })
        .map(|(a, ())| a)
    }

    pub fn finalize(&self, id: &str, now: DateTime<Utc>) -> Result<Assessment, StoreError> {
        self.update_assessment(id, now, |a, spec| {
            if a.is_finalized() {
                return Err(StoreError::Finalized);
            }
            let missing = a.missing_count(spec);
            if missing > 0 {
                return Err(StoreError::Incomplete(missing));
            }
            a.status = AssessmentStatus::Complete;
            Ok(())
        })
        .map(|(a, ())| a)
    }

    pub fn export_assessment(&self, id: &str, format: ExportFormat) -> Result<String, StoreError> {
        let a = self.assessment(id)?;
        match format {
            ExportFormat::Json => {
                let doc = ExportDocument {
                    format: EXPORT_FORMAT.into(),
                    format_version: EXPORT_FORMAT_VERSION,
                    portal: self.portal(&a.portal_id).ok(),
                    assessment: a,
                };
                Ok(serde_json::to_string_pretty(&doc).expect("assessment serializes"))
            }
            ExportFormat::Csv => export_csv(&a, self.framework(&a.framework_version)?),
        }
    }

    /// Restores an exported assessment. The portal profile carried by the
    /// document is added when the portal is unknown to this store.
    pub fn import_assessment(&self, document: &str) -> Result<Assessment, StoreError> {
        let doc: ExportDocument =
            serde_json::from_str(document).map_err(|e| StoreError::Validation(e.to_string()))?;
        if doc.format != EXPORT_FORMAT || doc.format_version != EXPORT_FORMAT_VERSION {
            return Err(StoreError::Validation(format!(
                "unsupported document format {} v{}",
                doc.format, doc.format_version
            )));
        }
        let a = doc.assessment;
        let spec = self.framework(&a.framework_version)?;
        a.check_references(spec)?;
        if let Some(bad) = a.evidence.iter().find(|(k, e)| *k != &e.evidence_id) {
            return Err(StoreError::Validation(format!("evidence key {} does not match its id", bad.0)));
        }
        if a.is_finalized() && a.missing_count(spec) > 0 {
            return Err(StoreError::Validation("complete assessment lacks verdicts".into()));
        }
        if self.portal(&a.portal_id).is_err() {
            match doc.portal {
                Some(p) if p.portal_id == a.portal_id => self.add_portal(&p)?,
                _ => return Err(StoreError::UnknownPortal(a.portal_id.clone())),
            }
        }
        let path = self.assessment_path(&a.assessment_id);
        if path.exists() {
            return Err(StoreError::DuplicateAssessment(a.assessment_id.clone()));
        }
        write_json(&path, &a)?;
        Ok(a)
    }
}

/// CSV columns: sub_dimension_id, dimension, label, weight, effective_value,
/// source, note, evidence_ids (`;`-separated). Rows follow framework order
/// and cover recorded sub-dimensions only; an incomplete assessment starts
/// with a `# provisional` line.
pub fn export_csv(a: &Assessment, spec: &FrameworkSpec) -> Result<String, StoreError> {
    let eff = a.effective_verdicts();
    let mut out = Vec::new();
    if a.missing_count(spec) > 0 {
        out.extend_from_slice(b"# provisional\n");
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let csv_err = |e: csv::Error| StoreError::Validation(e.to_string());
        w.write_record([
            "sub_dimension_id",
            "dimension",
            "label",
            "weight",
            "effective_value",
            "source",
            "note",
            "evidence_ids",
        ])
        .map_err(csv_err)?;
        for dim in &spec.dimensions {
            for sub in &dim.sub_dimensions {
                let Some(v) = eff.get(&sub.id) else { continue };
                w.write_record([
                    sub.id.as_str(),
                    &dim.id.to_string(),
                    &sub.label,
                    sub.weight.as_str(),
                    &v.value.to_string(),
                    v.source.as_str(),
                    v.note.as_deref().unwrap_or(""),
                    &v.evidence_refs.join(";"),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| StoreError::Io { path: PathBuf::from("<csv>"), source: e })?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(StoreError::io(dir))? {
        let path = entry.map_err(StoreError::io(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(StoreError::io(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Corrupt { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(StoreError::io(dir))?;
    let body = serde_json::to_vec_pretty(value).expect("store records serialize");
    tmp.write_all(&body).map_err(StoreError::io(path))?;
    tmp.write_all(b"\n").map_err(StoreError::io(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::EvidenceBody;
    use crate::scoring::{VerdictSource, VerdictValue};

    fn now() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2024-03-15T10:00:00Z").unwrap().to_utc()
    }

    fn profile(id: &str, region: Region) -> PortalProfile {
        PortalProfile {
            portal_id: id.into(),
            name: id.to_uppercase(),
            country: String::new(),
            region,
            homepage: format!("http://{id}.test/"),
            catalog_endpoints: vec![],
            notes: String::new(),
        }
    }

    fn store() -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        (dir, store)
    }

    fn verdict(id: &str, value: bool, source: VerdictSource) -> Verdict {
        Verdict::new(id, value, source, now())
    }

    #[test]
    fn portals() {
        let (_d, s) = store();
        s.add_portal(&profile("fr", Region::Eu)).unwrap();
        s.add_portal(&profile("sa", Region::Gcc)).unwrap();
        assert!(matches!(s.add_portal(&profile("fr", Region::Eu)), Err(StoreError::DuplicatePortal(_))));
        assert!(matches!(s.add_portal(&profile("Bad Id", Region::Eu)), Err(StoreError::InvalidPortal(_))));
        let gcc = s.list_portals(Some(Region::Gcc)).unwrap();
        assert_eq!(gcc.len(), 1);
        assert_eq!(gcc[0].portal_id, "sa");
        assert_eq!(s.list_portals(None).unwrap().len(), 2);
    }

    #[test]
    fn create_rules() {
        let (_d, s) = store();
        assert!(matches!(s.create_assessment("nope", "1.0.0", now()), Err(StoreError::UnknownPortal(_))));
        s.add_portal(&profile("fr", Region::Eu)).unwrap();
        let a = s.create_assessment("fr", "1.0.0", now()).unwrap();
        assert!(a.verdict_log.is_empty());
        assert_eq!(a.assessment_id, "fr-1");
        assert_eq!(a.reference_date, now().date_naive());
        assert!(matches!(s.create_assessment("fr", "1.0.0", now()), Err(StoreError::OpenAssessmentExists { .. })));
        assert!(matches!(s.create_assessment("fr", "9.9.9", now()), Err(StoreError::UnknownFramework { .. })));
    }

    #[test]
    fn precedence() {
        let (_d, s) = store();
        s.add_portal(&profile("fr", Region::Eu)).unwrap();
        let id = s.create_assessment("fr", "1.0.0", now()).unwrap().assessment_id;

        s.record_verdict(&id, verdict("c1", true, VerdictSource::Manual), now()).unwrap();
        let a = s.record_verdict(&id, verdict("c1", false, VerdictSource::Auto), now()).unwrap();
        assert_eq!(a.verdict_log.len(), 2);
        assert_eq!(a.effective_verdicts()["c1"].value, VerdictValue::PASS);

        s.record_verdict(&id, verdict("c3", false, VerdictSource::Auto), now()).unwrap();
        let a = s.record_verdict(&id, verdict("c3", true, VerdictSource::Manual), now()).unwrap();
        assert_eq!(a.effective_verdicts()["c3"].value, VerdictValue::PASS);

        let a = s.record_verdict(&id, verdict("c3", false, VerdictSource::Override), now()).unwrap();
        assert_eq!(a.effective_verdicts()["c3"].source, VerdictSource::Override);

        assert!(matches!(
            s.record_verdict(&id, verdict("z9", true, VerdictSource::Manual), now()),
            Err(StoreError::UnknownSubDimension(_))
        ));
        let mut dangling = verdict("a1", true, VerdictSource::Manual);
        dangling.evidence_refs.push("nope".into());
        assert!(matches!(s.record_verdict(&id, dangling, now()), Err(StoreError::DanglingEvidence(_))));
    }

    #[test]
    fn finalize_and_lock() {
        let (_d, s) = store();
        s.add_portal(&profile("fr", Region::Eu)).unwrap();
        let id = s.create_assessment("fr", "1.0.0", now()).unwrap().assessment_id;
        assert!(matches!(s.finalize(&id, now()), Err(StoreError::Incomplete(72))));
        let ids: Vec<String> = s.default_framework().sub_dimensions().map(|x| x.id.clone()).collect();
        for sub in &ids {
            s.record_verdict(&id, verdict(sub, true, VerdictSource::Manual), now()).unwrap();
        }
        let a = s.finalize(&id, now()).unwrap();
        assert!(a.is_finalized());
        assert_eq!(a.score(s.default_framework()).unwrap().total, 176);
        assert!(matches!(
            s.record_verdict(&id, verdict("a1", false, VerdictSource::Manual), now()),
            Err(StoreError::Finalized)
        ));
        // a new audit may start once the previous one is closed
        assert_eq!(s.create_assessment("fr", "1.0.0", now()).unwrap().assessment_id, "fr-2");
    }

    #[test]
    fn export_import() {
        let (_d, s) = store();
        s.add_portal(&profile("fr", Region::Eu)).unwrap();
        let id = s.create_assessment("fr", "1.0.0", now()).unwrap().assessment_id;
        s.put_evidence(
            &id,
            Evidence {
                evidence_id: format!("{id}/note"),
                captured_at: now(),
                sub_dimension_ids: vec!["b1".into()],
                body: EvidenceBody::ManualNote { text: "menu, ok".into() },
            },
            now(),
        )
        .unwrap();
        let mut v = verdict("b1", true, VerdictSource::Manual);
        v.evidence_refs.push(format!("{id}/note"));
        v.note = Some("clear, \"sticky\" menu".into());
        s.record_verdict(&id, v, now()).unwrap();
        s.record_verdict(&id, verdict("a1", false, VerdictSource::Auto), now()).unwrap();

        let csv = s.export_assessment(&id, ExportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# provisional");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("b1,b,convenient menu bar structure,high,1,manual,"));

        let json = s.export_assessment(&id, ExportFormat::Json).unwrap();
        let (_d2, other) = store();
        let back = other.import_assessment(&json).unwrap();
        let orig = s.assessment(&id).unwrap();
        assert_eq!(back, orig);
        assert_eq!(other.portal("fr").unwrap(), s.portal("fr").unwrap());
        assert!(matches!(other.import_assessment(&json), Err(StoreError::DuplicateAssessment(_))));

        let tampered = json.replacen("\"value\": 1", "\"value\": 2", 1);
        assert!(matches!(other.import_assessment(&tampered), Err(StoreError::Validation(_))));

        let foreign = json.replace("\"framework_version\": \"1.0.0\"", "\"framework_version\": \"7.0.0\"");
        let err = store().1.import_assessment(&foreign).unwrap_err();
        assert!(err.to_string().contains("7.0.0") && err.to_string().contains("1.0.0"), "{err}");
    }

    #[test]
    fn extra_framework_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = builtin_framework();
        spec.version = "1.1.0".into();
        fs::create_dir_all(dir.path().join("frameworks")).unwrap();
        fs::write(dir.path().join("frameworks/1.1.0.json"), spec.to_json()).unwrap();
        let s = Store::open(dir.path()).unwrap();
        assert!(s.framework("1.1.0").is_ok());
        assert_eq!(s.default_framework().version, "1.0.0");
    }
}
