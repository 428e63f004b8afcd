//! The weighted checklist every assessment is scored against.
//!
//! A [`FrameworkSpec`] is loaded from a JSON document (see
//! `schemas/framework.schema.json`) and validated against the structural
//! invariants of the default checklist: nine dimensions `a`..`i`, 72
//! sub-dimensions, 39 high / 26 medium / 7 low weights (maximum score 176).
//! The default document is bundled and returned by [`builtin_framework`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

const BUILTIN_DOCUMENT: &str = include_str!("../data/framework-1.0.0.json");

/// Dimension ids with their sub-dimension weights, one letter per ordinal
/// (`l`ow, `m`edium, `h`igh).
const REFERENCE_WEIGHTS: [(char, &str); 9] = [
    ('a', "lmhh"),
    ('b', "hmm"),
    ('c', "hlhm"),
    ('d', "hmmlmhhhmmh"),
    ('e', "hhhhmmhhh"),
    ('f', "hhhmmlhhmmhmmhh"),
    ('g', "hmhmhhlhlhmhh"),
    ('h', "mhhmhmm"),
    ('i', "mhmhhl"),
];

/// Sub-dimensions evaluated over the dataset sample.
pub const SAMPLED_IDS: [&str; 15] = [
    "d2", "d3", "d4", "d5", "d7", "d8", "d10", "d11", "e1", "e2", "e3", "e4", "e7", "f10", "f11",
];

/// Sub-dimensions fed by an imported external score.
pub const EXTERNAL_SCORE_IDS: [&str; 1] = ["c4"];

pub const EXPECTED_SUB_DIMENSIONS: usize = 72;
pub const EXPECTED_WEIGHT_COUNTS: WeightCounts = WeightCounts { high: 39, medium: 26, low: 7 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    Low,
    Medium,
    High,
}

impl Weight {
    /// Score multiplier: low 1, medium 2, high 3.
    pub fn value(self) -> u32 {
        match self {
            Weight::Low => 1,
            Weight::Medium => 2,
            Weight::High => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weight::Low => "low",
            Weight::Medium => "medium",
            Weight::High => "high",
        }
    }

    fn from_letter(c: char) -> Option<Weight> {
        match c {
            'l' => Some(Weight::Low),
            'm' => Some(Weight::Medium),
            'h' => Some(Weight::High),
            _ => None,
        }
    }

    fn parse(s: &str) -> Option<Weight> {
        match s {
            "low" => Some(Weight::Low),
            "medium" => Some(Weight::Medium),
            "high" => Some(Weight::High),
            _ => None,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a sub-dimension's verdict is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Manual,
    Automated,
    Sampled,
    ExternalScore,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Manual => "manual",
            Method::Automated => "automated",
            Method::Sampled => "sampled",
            Method::ExternalScore => "external_score",
        }
    }

    fn parse(s: &str) -> Option<Method> {
        match s {
            "manual" => Some(Method::Manual),
            "automated" => Some(Method::Automated),
            "sampled" => Some(Method::Sampled),
            "external_score" => Some(Method::ExternalScore),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubDimension {
    pub id: String,
    pub label: String,
    pub weight: Weight,
    pub method: Method,
    pub guidance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_hint: Option<String>,
    /// Metadata fields a dataset must fill in; only meaningful for `e2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_fields: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub id: char,
    pub name: String,
    pub sub_dimensions: Vec<SubDimension>,
}

impl Dimension {
    /// Score obtained when every sub-dimension passes.
    pub fn max_score(&self) -> u32 {
        self.sub_dimensions.iter().map(|s| s.weight.value()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameworkSpec {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance_note: Option<String>,
    pub dimensions: Vec<Dimension>,
}

impl FrameworkSpec {
    pub fn sub_dimensions(&self) -> impl Iterator<Item = &SubDimension> + '_ {
        self.dimensions.iter().flat_map(|d| d.sub_dimensions.iter())
    }

    pub fn sub_dimension(&self, id: &str) -> Option<&SubDimension> {
        self.sub_dimensions().find(|s| s.id == id)
    }

    pub fn dimension(&self, id: char) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.id == id)
    }

    /// The dimension a sub-dimension belongs to.
    pub fn dimension_of(&self, sub_id: &str) -> Option<&Dimension> {
        self.dimensions
            .iter()
            .find(|d| d.sub_dimensions.iter().any(|s| s.id == sub_id))
    }

    pub fn len(&self) -> usize {
        self.dimensions.iter().map(|d| d.sub_dimensions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_total(&self) -> u32 {
        self.dimensions.iter().map(Dimension::max_score).sum()
    }

    pub fn dimension_maxima(&self) -> BTreeMap<char, u32> {
        self.dimensions.iter().map(|d| (d.id, d.max_score())).collect()
    }

    pub fn weight_counts(&self) -> WeightCounts {
        let mut counts = WeightCounts::default();
        for s in self.sub_dimensions() {
            match s.weight {
                Weight::High => counts.high += 1,
                Weight::Medium => counts.medium += 1,
                Weight::Low => counts.low += 1,
            }
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("framework spec serializes")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightCounts {
    pub high: usize,
    pub medium: usize,
    pub low: usize,
}

impl fmt::Display for WeightCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.high, self.medium, self.low)
    }
}

/// One broken invariant. `subject` names the offending dimension or
/// sub-dimension when there is one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: Option<String>,
    pub message: String,
}

impl Violation {
    fn on(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { subject: Some(subject.into()), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Violation { subject: None, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subject {
            Some(s) => write!(f, "{s}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.subject.as_deref() == Some(needle) || v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FrameworkError {
    #[error("malformed framework document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid framework: {0}")]
    Invalid(ValidationReport),
}

/// The bundled default framework.
pub fn builtin_framework() -> FrameworkSpec {
    load_framework(BUILTIN_DOCUMENT).expect("bundled framework is valid")
}

/// The bundled framework document, as shipped.
pub fn builtin_document() -> &'static str {
    BUILTIN_DOCUMENT
}

#[derive(Deserialize)]
struct RawSpec {
    version: String,
    #[serde(default)]
    provenance_note: Option<String>,
    dimensions: Vec<RawDimension>,
}

#[derive(Deserialize)]
struct RawDimension {
    id: char,
    name: String,
    sub_dimensions: Vec<RawSubDimension>,
}

#[derive(Deserialize)]
struct RawSubDimension {
    id: String,
    label: String,
    weight: String,
    method: String,
    #[serde(default)]
    guidance: String,
    #[serde(default)]
    probe_hint: Option<String>,
    #[serde(default)]
    required_fields: Option<Vec<String>>,
}

/// Parses and validates a framework document.
pub fn load_framework(document: &str) -> Result<FrameworkSpec, FrameworkError> {
    let raw: RawSpec = serde_json::from_str(document)?;

    let mut enum_violations = Vec::new();
    let mut dimensions = Vec::with_capacity(raw.dimensions.len());
    for d in raw.dimensions {
        let mut subs = Vec::with_capacity(d.sub_dimensions.len());
        for s in d.sub_dimensions {
            let weight = Weight::parse(&s.weight);
            let method = Method::parse(&s.method);
            if weight.is_none() {
                enum_violations.push(Violation::on(&s.id, format!("unknown weight \"{}\"", s.weight)));
            }
            if method.is_none() {
                enum_violations.push(Violation::on(&s.id, format!("unknown method \"{}\"", s.method)));
            }
            if let (Some(weight), Some(method)) = (weight, method) {
                subs.push(SubDimension {
                    id: s.id,
                    label: s.label,
                    weight,
                    method,
                    guidance: s.guidance,
                    probe_hint: s.probe_hint,
                    required_fields: s.required_fields,
                });
            }
        }
        dimensions.push(Dimension { id: d.id, name: d.name, sub_dimensions: subs });
    }
    if !enum_violations.is_empty() {
        return Err(FrameworkError::Invalid(ValidationReport { violations: enum_violations }));
    }

    let spec = FrameworkSpec { version: raw.version, provenance_note: raw.provenance_note, dimensions };
    let report = validate_framework(&spec);
    if report.is_empty() {
        Ok(spec)
    } else {
        Err(FrameworkError::Invalid(report))
    }
}

/// Checks every structural invariant and returns one entry per violation.
pub fn validate_framework(spec: &FrameworkSpec) -> ValidationReport {
    let mut out = Vec::new();

    if !is_semver(&spec.version) {
        out.push(Violation::global(format!("version \"{}\" is not MAJOR.MINOR.PATCH", spec.version)));
    }

    let expected: BTreeMap<char, &str> = REFERENCE_WEIGHTS.iter().copied().collect();
    let mut seen_dims = BTreeSet::new();
    for d in &spec.dimensions {
        let key = d.id.to_string();
        if !seen_dims.insert(d.id) {
            out.push(Violation::on(&key, format!("duplicate dimension id {key}")));
            continue;
        }
        let Some(reference) = expected.get(&d.id) else {
            out.push(Violation::on(&key, format!("unexpected dimension id {key}")));
            continue;
        };
        let want = reference.chars().count();
        if d.sub_dimensions.len() != want {
            out.push(Violation::on(
                &key,
                format!("dimension {key} has {} sub-dimensions, expected {want}", d.sub_dimensions.len()),
            ));
        }
        for (ordinal, s) in d.sub_dimensions.iter().enumerate() {
            let want_id = format!("{}{}", d.id, ordinal + 1);
            if s.id != want_id {
                out.push(Violation::on(
                    &s.id,
                    format!("sub-dimension id {} out of place, expected {want_id}", s.id),
                ));
            }
        }
    }
    for id in expected.keys() {
        if !seen_dims.contains(id) {
            out.push(Violation::on(id.to_string(), format!("missing dimension {id}")));
        }
    }

    let mut seen_subs = BTreeSet::new();
    for s in spec.sub_dimensions() {
        if !seen_subs.insert(s.id.as_str()) {
            out.push(Violation::on(&s.id, format!("duplicate id {}", s.id)));
        }
    }

    let total = spec.len();
    if total != EXPECTED_SUB_DIMENSIONS {
        out.push(Violation::global(format!(
            "sub-dimension count is {total}, expected {EXPECTED_SUB_DIMENSIONS}"
        )));
    }

    let counts = spec.weight_counts();
    if counts != EXPECTED_WEIGHT_COUNTS {
        out.push(Violation::global(format!(
            "weight multiset mismatch: expected {EXPECTED_WEIGHT_COUNTS}, found {counts}"
        )));
    }

    for d in &spec.dimensions {
        let Some(reference) = expected.get(&d.id) else { continue };
        for (s, letter) in d.sub_dimensions.iter().zip(reference.chars()) {
            let want = Weight::from_letter(letter).expect("reference table letters");
            if s.weight != want {
                out.push(Violation::on(&s.id, format!("weight {} on {}, expected {want}", s.weight, s.id)));
            }
        }
    }

    for s in spec.sub_dimensions() {
        let sampled = SAMPLED_IDS.contains(&s.id.as_str());
        let external = EXTERNAL_SCORE_IDS.contains(&s.id.as_str());
        let method_ok = match s.method {
            Method::Sampled => sampled,
            Method::ExternalScore => external,
            Method::Manual | Method::Automated => !sampled && !external,
        };
        if !method_ok {
            let want = if sampled {
                "sampled"
            } else if external {
                "external_score"
            } else {
                "manual or automated"
            };
            out.push(Violation::on(
                &s.id,
                format!("method {} on {}, expected {want}", s.method.as_str(), s.id),
            ));
        }
    }

    ValidationReport { violations: out }
}

fn is_semver(v: &str) -> bool {
    let core = v.split(['-', '+']).next().unwrap_or("");
    let parts: Vec<&str> = core.split('.').collect();
    parts.len() == 3 && parts.iter().all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let spec = builtin_framework();
        assert_eq!(spec.len(), 72);
        assert_eq!(spec.max_total(), 176);
        let a = spec.dimension('a').unwrap();
        let weights: Vec<_> = a.sub_dimensions.iter().map(|s| s.weight).collect();
        assert_eq!(weights, [Weight::Low, Weight::Medium, Weight::High, Weight::High]);
        assert!(validate_framework(&spec).is_empty());
    }

    #[test]
    fn builtin_maxima() {
        let maxima: Vec<u32> = builtin_framework().dimension_maxima().into_values().collect();
        assert_eq!(maxima, [9, 7, 9, 26, 25, 37, 32, 17, 14]);
    }

    #[test]
    fn weight_values() {
        assert_eq!(Weight::Low.value(), 1);
        assert_eq!(Weight::Medium.value(), 2);
        assert_eq!(Weight::High.value(), 3);
    }

    #[test]
    fn round_trip() {
        let spec = builtin_framework();
        let again = load_framework(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn methods_partition() {
        let spec = builtin_framework();
        let sampled: Vec<_> = spec
            .sub_dimensions()
            .filter(|s| s.method == Method::Sampled)
            .map(|s| s.id.as_str())
            .collect();
        assert_eq!(sampled, SAMPLED_IDS);
        let external: Vec<_> = spec
            .sub_dimensions()
            .filter(|s| s.method == Method::ExternalScore)
            .map(|s| s.id.as_str())
            .collect();
        assert_eq!(external, ["c4"]);
    }

    #[test]
    fn seventy_one_sub_dimensions_rejected() {
        let mut spec = builtin_framework();
        spec.dimensions[8].sub_dimensions.pop();
        let err = load_framework(&spec.to_json()).unwrap_err();
        let FrameworkError::Invalid(report) = err else { panic!("expected validation error") };
        assert!(report.mentions("sub-dimension count is 71"), "{report}");
    }

    #[test]
    fn unknown_weight_names_sub_dimension() {
        let mut value: serde_json::Value = serde_json::from_str(builtin_document()).unwrap();
        value["dimensions"][1]["sub_dimensions"][0]["weight"] = "critical".into();
        let err = load_framework(&value.to_string()).unwrap_err();
        let FrameworkError::Invalid(report) = err else { panic!("expected validation error") };
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].subject.as_deref(), Some("b1"));
    }

    #[test]
    fn d8_downgrade_breaks_multiset() {
        let mut spec = builtin_framework();
        let d8 = spec.dimensions[3].sub_dimensions.iter_mut().find(|s| s.id == "d8").unwrap();
        d8.weight = Weight::Medium;
        let report = validate_framework(&spec);
        assert!(report.mentions("weight multiset mismatch: expected {39,26,7}"), "{report}");
        assert!(report.mentions("d8"));
        assert_eq!(spec.max_total(), 175);
    }

    #[test]
    fn duplicate_id_reported() {
        let mut spec = builtin_framework();
        spec.dimensions[4].sub_dimensions[4].id = "e4".into();
        let report = validate_framework(&spec);
        assert!(report.mentions("duplicate id e4"), "{report}");
    }

    #[test]
    fn malformed_document_is_parse_error() {
        assert!(matches!(load_framework("{\"version\": 1"), Err(FrameworkError::Parse(_))));
    }

    #[test]
    fn bad_version() {
        let mut spec = builtin_framework();
        spec.version = "one".into();
        assert!(validate_framework(&spec).mentions("version"));
    }
}
