//! Portal-level gates: homepage load time, blocking errors, accessibility.
//!
//! The network side lives in `oda-probe`; this module holds the measurement
//! types and the pass/fail rules applied to them.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Homepage loads must be strictly faster than this.
pub const LOAD_TIME_LIMIT_MS: u64 = 4000;

/// Minimum accessibility score (inclusive) for `c4`.
pub const ACCESSIBILITY_PASS_SCORE: f64 = 71.0;

#[derive(Debug, thiserror::Error)]
pub enum WebError {
    #[error("malformed accessibility report: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("accessibility score {0} outside [0, 100]")]
    ScoreOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadMeasurement {
    pub url: String,
    /// Successful attempts, in milliseconds.
    pub attempts: Vec<u64>,
    pub median_ms: u64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl LoadMeasurement {
    /// `None` when no attempt succeeded.
    pub fn from_attempts(url: impl Into<String>, attempts: Vec<u64>, failures: Vec<String>) -> Option<Self> {
        let median_ms = median_ms(&attempts)?;
        Some(LoadMeasurement { url: url.into(), attempts, median_ms, passed: load_time_passes(median_ms), failures })
    }
}

/// Median; for an even count, the mean of the two middle values rounded down.
pub fn median_ms(attempts: &[u64]) -> Option<u64> {
    if attempts.is_empty() {
        return None;
    }
    let mut v = attempts.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2 })
}

pub fn load_time_passes(median_ms: u64) -> bool {
    median_ms < LOAD_TIME_LIMIT_MS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCheck {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub body_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingError {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthSweep {
    pub pages: Vec<PageCheck>,
    pub blocking_errors: Vec<BlockingError>,
}

impl HealthSweep {
    /// Classifies fetched pages. Server errors, network failures and empty
    /// bodies block; every page in the sweep is a required page.
    pub fn from_pages(pages: Vec<PageCheck>) -> Self {
        let blocking_errors = pages
            .iter()
            .filter_map(|p| {
                let reason = match (p.status, &p.error) {
                    (_, Some(e)) => format!("network failure: {e}"),
                    (Some(s), None) if s >= 500 => format!("server error {s}"),
                    (Some(_), None) if p.body_bytes == 0 => "empty body".to_string(),
                    (None, None) => "network failure".to_string(),
                    _ => return None,
                };
                Some(BlockingError { url: p.url.clone(), reason })
            })
            .collect();
        HealthSweep { pages, blocking_errors }
    }

    pub fn passed(&self) -> bool {
        self.blocking_errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityIssue {
    pub severity: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityReport {
    pub source: String,
    pub score: f64,
    pub critical_issue_count: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<AccessibilityIssue>,
    pub fetched_at: DateTime<Utc>,
}

impl AccessibilityReport {
    pub fn passes(&self) -> bool {
        accessibility_passes(self.score, self.critical_issue_count)
    }
}

pub fn accessibility_passes(score: f64, critical_issue_count: u32) -> bool {
    score >= ACCESSIBILITY_PASS_SCORE && critical_issue_count == 0
}

#[derive(Deserialize)]
struct ReportInput {
    source: String,
    score: f64,
    critical_issue_count: u32,
    #[serde(default)]
    issues: Vec<AccessibilityIssue>,
}

/// Reads an accessibility report produced by any checker.
pub fn ingest_accessibility_report(document: &str, fetched_at: DateTime<Utc>) -> Result<AccessibilityReport, WebError> {
    let input: ReportInput = serde_json::from_str(document)?;
    if !(0.0..=100.0).contains(&input.score) {
        return Err(WebError::ScoreOutOfRange(input.score));
    }
    Ok(AccessibilityReport {
        source: input.source,
        score: input.score,
        critical_issue_count: input.critical_issue_count,
        issues: input.issues,
        fetched_at,
    })
}

/// Fixture-grade accessibility heuristic over raw HTML.
///
/// Images without `alt` are critical; a missing `lang`, a missing `<title>`
/// and unlabeled form controls are serious; inline colour pairs are flagged
/// for manual contrast review. Score starts at 100 and loses 10 per critical,
/// 5 per serious and 1 per minor finding.
pub fn heuristic_accessibility(html: &str, page_url: &str, fetched_at: DateTime<Utc>) -> AccessibilityReport {
    let tags = scan_tags(html);
    let issue = |severity: &str, description: String| AccessibilityIssue {
        severity: severity.into(),
        description,
        url: Some(page_url.to_string()),
    };
    let mut issues = Vec::new();

    if !tags.iter().any(|t| t.name == "html" && t.attr("lang").is_some_and(|l| !l.is_empty())) {
        issues.push(issue("serious", "document language not declared".into()));
    }
    if !tags.iter().any(|t| t.name == "title") {
        issues.push(issue("serious", "page has no title".into()));
    }
    let labelled: HashSet<&str> = tags.iter().filter(|t| t.name == "label").filter_map(|t| t.attr("for")).collect();
    for t in &tags {
        match t.name.as_str() {
            "img" if t.attr("alt").is_none() => {
                let src = t.attr("src").unwrap_or("?");
                issues.push(issue("critical", format!("image without alt text: {src}")));
            }
            "input" | "select" | "textarea" => {
                let kind = t.attr("type").unwrap_or("text");
                if matches!(kind, "hidden" | "submit" | "button" | "reset" | "image") {
                    continue;
                }
                let named = t.attr("aria-label").is_some()
                    || t.attr("aria-labelledby").is_some()
                    || t.attr("title").is_some()
                    || t.attr("id").is_some_and(|id| labelled.contains(id));
                if !named {
                    issues.push(issue("serious", format!("unlabeled form control <{}>", t.name)));
                }
            }
            _ => {}
        }
        if let Some(style) = t.attr("style") {
            let style = style.to_ascii_lowercase();
            if style.contains("background") && style.replace("background-color", "").contains("color") {
                issues.push(issue("minor", format!("inline colour pair on <{}>, review contrast", t.name)));
            }
        }
    }

    let count = |sev: &str| issues.iter().filter(|i| i.severity == sev).count() as f64;
    let critical = count("critical");
    let score = (100.0 - 10.0 * critical - 5.0 * count("serious") - count("minor")).max(0.0);
    AccessibilityReport {
        source: "oda-heuristic".into(),
        score,
        critical_issue_count: critical as u32,
        issues,
        fetched_at,
    }
}

struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
}

impl Tag {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

fn scan_tags(html: &str) -> Vec<Tag> {
    let mut tags = Vec::new();
    let mut rest = html;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        let end = rest.find('>').unwrap_or(rest.len());
        let inner = &rest[..end];
        rest = &rest[end.min(rest.len())..];
        if inner.starts_with('/') || inner.starts_with('!') || inner.starts_with('?') {
            continue;
        }
        let name_end = inner.find(|c: char| c.is_whitespace() || c == '/').unwrap_or(inner.len());
        let name = inner[..name_end].to_ascii_lowercase();
        if name.is_empty() {
            continue;
        }
        tags.push(Tag { name, attrs: parse_attrs(&inner[name_end..]) });
    }
    tags
}

fn parse_attrs(mut s: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    loop {
        s = s.trim_start_matches(|c: char| c.is_whitespace() || c == '/');
        if s.is_empty() {
            return out;
        }
        let key_end = s.find(|c: char| c.is_whitespace() || c == '=' || c == '/').unwrap_or(s.len());
        let key = s[..key_end].to_ascii_lowercase();
        s = s[key_end..].trim_start();
        let mut value = String::new();
        if let Some(after) = s.strip_prefix('=') {
            let after = after.trim_start();
            match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let body = &after[1..];
                    let close = body.find(q).unwrap_or(body.len());
                    value = body[..close].to_string();
                    s = &body[(close + 1).min(body.len())..];
                }
                _ => {
                    let stop = after.find(char::is_whitespace).unwrap_or(after.len());
                    value = after[..stop].to_string();
                    s = &after[stop..];
                }
            }
        }
        if key.is_empty() {
            return out;
        }
        out.push((key, value));
    }
}
