//! Ranking, per-portal, leader, shortcoming and region reports.
//!
//! Every builder takes `generated_at` from the caller so that identical
//! inputs render to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::framework::FrameworkSpec;
use crate::scoring::{dimension_leaders, rank, PortalScore, RankingEntry, ScoringError, ShortcomingStats};
use crate::store::{Assessment, AssessmentStatus, Region};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to report: no scores")]
    Empty,
    #[error("no region has a complete assessment")]
    AllRegionsEmpty,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("report kind {kind} has no {format} rendering")]
    Unsupported { kind: &'static str, format: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Md,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Md => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Some(ReportFormat::Md),
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

/// `<kind>-<framework-version>-<date>.<ext>`
pub fn report_file_name(kind: &str, framework_version: &str, date: NaiveDate, format: ReportFormat) -> String {
    format!("{kind}-{framework_version}-{}.{}", date.format("%Y-%m-%d"), format.extension())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Portals at or above this total are counted.
    pub high: u32,
    /// Portals strictly below this total are counted.
    pub low: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { high: 100, low: 50 }
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn markdown(&self, right_align_from: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.headers.join(" | "));
        let sep: Vec<&str> =
            (0..self.headers.len()).map(|i| if i >= right_align_from { "---:" } else { "---" }).collect();
        let _ = writeln!(out, "|{}|", sep.join("|"));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        "portal"
    } else {
        "portals"
    }
}

fn stamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn dims(spec: &FrameworkSpec) -> Vec<char> {
    spec.dimensions.iter().map(|d| d.id).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub generated_at: DateTime<Utc>,
    pub framework_version: String,
    pub entries: Vec<RankingEntry>,
    pub provisional_flags: BTreeMap<String, bool>,
    pub thresholds: Thresholds,
    pub at_or_above_high: usize,
    pub below_low: usize,
}

impl RankingReport {
    pub fn build(
        spec: &FrameworkSpec,
        scores: &[PortalScore],
        thresholds: Thresholds,
        generated_at: DateTime<Utc>,
    ) -> Result<RankingReport, ReportError> {
        if scores.is_empty() {
            return Err(ReportError::Empty);
        }
        let entries = rank(scores);
        Ok(RankingReport {
            generated_at,
            framework_version: spec.version.clone(),
            provisional_flags: scores.iter().map(|s| (s.portal_id.clone(), s.provisional)).collect(),
            at_or_above_high: entries.iter().filter(|e| e.total >= thresholds.high).count(),
            below_low: entries.iter().filter(|e| e.total < thresholds.low).count(),
            thresholds,
            entries,
        })
    }

    /// The line reporting how many portals reached the upper threshold.
    pub fn high_line(&self) -> String {
        format!("{} {} ≥ {}", self.at_or_above_high, plural(self.at_or_above_high), self.thresholds.high)
    }

    pub fn low_line(&self) -> String {
        format!("{} {} < {}", self.below_low, plural(self.below_low), self.thresholds.low)
    }

    fn table(&self) -> Table {
        let dims: Vec<char> = self
            .entries
            .first()
            .map(|e| e.dimension_subtotals.keys().copied().collect())
            .unwrap_or_default();
        let mut headers: Vec<String> = ["rank", "portal", "total"].map(String::from).to_vec();
        headers.extend(dims.iter().map(char::to_string));
        headers.push("status".into());
        let rows = self
            .entries
            .iter()
            .map(|e| {
                let mut row = vec![e.rank.to_string(), e.portal_id.clone(), e.total.to_string()];
                row.extend(dims.iter().map(|d| e.dimension_subtotals.get(d).copied().unwrap_or(0).to_string()));
                let provisional = self.provisional_flags.get(&e.portal_id).copied().unwrap_or(false);
                row.push(if provisional { "provisional" } else { "complete" }.into());
                row
            })
            .collect();
        Table { headers, rows }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => json(self),
            ReportFormat::Csv => self.table().csv(),
            ReportFormat::Md => {
                let mut out = String::from("# Portal ranking\n\n");
                let _ = writeln!(out, "Framework {}, generated {}\n", self.framework_version, stamp(&self.generated_at));
                out.push_str(&self.table().markdown(2));
                let _ = writeln!(out, "\n- {}\n- {}", self.high_line(), self.low_line());
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionLine {
    pub dimension: char,
    pub name: String,
    pub subtotal: u32,
    pub maximum: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedItem {
    pub sub_dimension_id: String,
    pub label: String,
    pub weight: String,
    pub guidance: String,
    pub evidence_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortalReport {
    pub generated_at: DateTime<Utc>,
    pub portal_id: String,
    pub portal_name: String,
    pub assessment_id: String,
    pub framework_version: String,
    pub status: AssessmentStatus,
    pub provisional: bool,
    pub total: u32,
    pub max_total: u32,
    pub dimensions: Vec<DimensionLine>,
    /// Sub-dimensions with an effective verdict of 0.
    pub failed: Vec<FailedItem>,
    /// Sub-dimensions without any verdict.
    pub missing: Vec<String>,
}

impl PortalReport {
    pub fn build(
        spec: &FrameworkSpec,
        assessment: &Assessment,
        portal_name: &str,
        generated_at: DateTime<Utc>,
    ) -> Result<PortalReport, ReportError> {
        let score = assessment.score(spec)?;
        let eff = assessment.effective_verdicts();
        let mut failed = Vec::new();
        let mut missing = Vec::new();
        for sub in spec.sub_dimensions() {
            match eff.get(&sub.id) {
                None => missing.push(sub.id.clone()),
                Some(v) if !v.value.passed() => failed.push(FailedItem {
                    sub_dimension_id: sub.id.clone(),
                    label: sub.label.clone(),
                    weight: sub.weight.as_str().into(),
                    guidance: sub.guidance.clone(),
                    evidence_ids: v.evidence_refs.clone(),
                }),
                Some(_) => {}
            }
        }
        Ok(PortalReport {
            generated_at,
            portal_id: assessment.portal_id.clone(),
            portal_name: portal_name.to_string(),
            assessment_id: assessment.assessment_id.clone(),
            framework_version: spec.version.clone(),
            status: assessment.status,
            provisional: score.provisional,
            total: score.total,
            max_total: spec.max_total(),
            dimensions: spec
                .dimensions
                .iter()
                .map(|d| DimensionLine {
                    dimension: d.id,
                    name: d.name.clone(),
                    subtotal: score.dimension_subtotals.get(&d.id).copied().unwrap_or(0),
                    maximum: d.max_score(),
                })
                .collect(),
            failed,
            missing,
        })
    }

    fn table(&self) -> Table {
        Table {
            headers: ["dimension", "name", "subtotal", "maximum"].map(String::from).to_vec(),
            rows: self
                .dimensions
                .iter()
                .map(|d| vec![d.dimension.to_string(), d.name.clone(), d.subtotal.to_string(), d.maximum.to_string()])
                .collect(),
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => json(self),
            ReportFormat::Csv => self.table().csv(),
            ReportFormat::Md => {
                let mut out = format!("# {} ({})\n\n", self.portal_name, self.portal_id);
                if self.provisional {
                    let _ = writeln!(
                        out,
                        "> **provisional**: {} sub-dimensions have no verdict and count as 0.\n",
                        self.missing.len()
                    );
                }
                let _ = writeln!(
                    out,
                    "Assessment {}, framework {}, generated {}\n",
                    self.assessment_id,
                    self.framework_version,
                    stamp(&self.generated_at)
                );
                let _ = writeln!(out, "Total: **{} / {}**\n", self.total, self.max_total);
                out.push_str(&self.table().markdown(2));
                out.push_str("\n## Failed sub-dimensions\n\n");
                if self.failed.is_empty() {
                    out.push_str("None.\n");
                }
                for f in &self.failed {
                    let _ = writeln!(out, "- **{}** {} ({})", f.sub_dimension_id, f.label, f.weight);
                    let _ = writeln!(out, "  - {}", f.guidance);
                    if !f.evidence_ids.is_empty() {
                        let _ = writeln!(out, "  - evidence: {}", f.evidence_ids.join(", "));
                    }
                }
                if !self.missing.is_empty() {
                    let _ = writeln!(out, "\n## Without verdict\n\n{}", self.missing.join(", "));
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderLine {
    pub dimension: char,
    pub name: String,
    pub best: u32,
    pub maximum: u32,
    pub portals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadersReport {
    pub generated_at: DateTime<Utc>,
    pub framework_version: String,
    pub leaders: Vec<LeaderLine>,
}

impl LeadersReport {
    pub fn build(
        spec: &FrameworkSpec,
        scores: &[PortalScore],
        generated_at: DateTime<Utc>,
    ) -> Result<LeadersReport, ReportError> {
        if scores.is_empty() {
            return Err(ReportError::Empty);
        }
        let by_dim = dimension_leaders(spec, scores)?;
        let leaders = spec
            .dimensions
            .iter()
            .map(|d| {
                let portals = by_dim.get(&d.id).cloned().unwrap_or_default();
                let best = scores
                    .iter()
                    .map(|s| s.dimension_subtotals.get(&d.id).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                LeaderLine { dimension: d.id, name: d.name.clone(), best, maximum: d.max_score(), portals }
            })
            .collect();
        Ok(LeadersReport { generated_at, framework_version: spec.version.clone(), leaders })
    }

    fn table(&self) -> Table {
        Table {
            headers: ["dimension", "name", "best", "maximum", "portals"].map(String::from).to_vec(),
            rows: self
                .leaders
                .iter()
                .map(|l| {
                    vec![
                        l.dimension.to_string(),
                        l.name.clone(),
                        l.best.to_string(),
                        l.maximum.to_string(),
                        l.portals.join(" "),
                    ]
                })
                .collect(),
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => json(self),
            ReportFormat::Csv => self.table().csv(),
            ReportFormat::Md => {
                let mut out = String::from("# Dimension leaders\n\n");
                let _ = writeln!(out, "Framework {}, generated {}\n", self.framework_version, stamp(&self.generated_at));
                out.push_str(&self.table().markdown(2));
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcomingLine {
    pub sub_dimension_id: String,
    pub label: String,
    pub passes: usize,
    pub assessed: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcomingsReport {
    pub generated_at: DateTime<Utc>,
    pub framework_version: String,
    /// Lowest pass rate first.
    pub lines: Vec<ShortcomingLine>,
}

impl ShortcomingsReport {
    pub fn build(spec: &FrameworkSpec, stats: &ShortcomingStats, generated_at: DateTime<Utc>) -> ShortcomingsReport {
        let lines = stats
            .ascending()
            .into_iter()
            .map(|r| ShortcomingLine {
                sub_dimension_id: r.sub_dimension_id.clone(),
                label: spec.sub_dimension(&r.sub_dimension_id).map(|s| s.label.clone()).unwrap_or_default(),
                passes: r.passes,
                assessed: r.assessed,
                rate: r.rate,
            })
            .collect();
        ShortcomingsReport { generated_at, framework_version: spec.version.clone(), lines }
    }

    fn table(&self) -> Table {
        Table {
            headers: ["sub_dimension", "label", "passes", "assessed", "pass_rate"].map(String::from).to_vec(),
            rows: self
                .lines
                .iter()
                .map(|l| {
                    vec![
                        l.sub_dimension_id.clone(),
                        l.label.clone(),
                        l.passes.to_string(),
                        l.assessed.to_string(),
                        format!("{:.3}", l.rate),
                    ]
                })
                .collect(),
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => json(self),
            ReportFormat::Csv => self.table().csv(),
            ReportFormat::Md => {
                let mut out = String::from("# Shortcomings\n\n");
                let _ = writeln!(out, "Framework {}, generated {}\n", self.framework_version, stamp(&self.generated_at));
                out.push_str(&self.table().markdown(2));
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub portal_count: usize,
    pub mean_total: f64,
    pub mean_subtotals: BTreeMap<char, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionComparison {
    pub generated_at: DateTime<Utc>,
    pub framework_version: String,
    pub regions: BTreeMap<Region, RegionStats>,
    pub warnings: Vec<String>,
}

impl RegionComparison {
    /// Means over complete (non-provisional) scores. Provisional scores are
    /// left out with a warning; requested regions without any complete score
    /// are left out with a warning.
    pub fn build(
        spec: &FrameworkSpec,
        scores: &[(Region, PortalScore)],
        regions: &[Region],
        generated_at: DateTime<Utc>,
    ) -> Result<RegionComparison, ReportError> {
        let mut warnings = Vec::new();
        for (_, s) in scores.iter().filter(|(_, s)| s.provisional) {
            warnings.push(format!("{} excluded: assessment incomplete", s.portal_id));
        }
        let mut out = BTreeMap::new();
        for &region in regions {
            let members: Vec<&PortalScore> =
                scores.iter().filter(|(r, s)| *r == region && !s.provisional).map(|(_, s)| s).collect();
            if members.is_empty() {
                warnings.push(format!("region {region} excluded: no complete assessment"));
                continue;
            }
            let n = members.len() as f64;
            let mean_subtotals = spec
                .dimensions
                .iter()
                .map(|d| {
                    let sum: u32 = members.iter().map(|s| s.dimension_subtotals.get(&d.id).copied().unwrap_or(0)).sum();
                    (d.id, sum as f64 / n)
                })
                .collect();
            out.insert(
                region,
                RegionStats {
                    portal_count: members.len(),
                    mean_total: members.iter().map(|s| s.total as f64).sum::<f64>() / n,
                    mean_subtotals,
                },
            );
        }
        if out.is_empty() {
            return Err(ReportError::AllRegionsEmpty);
        }
        if out.len() == 1 {
            warnings.push("only one region has complete assessments".into());
        }
        Ok(RegionComparison { generated_at, framework_version: spec.version.clone(), regions: out, warnings })
    }

    fn table(&self, spec_dims: &[char]) -> Table {
        let mut headers: Vec<String> = ["region", "portals", "mean_total"].map(String::from).to_vec();
        headers.extend(spec_dims.iter().map(char::to_string));
        let rows = self
            .regions
            .iter()
            .map(|(r, s)| {
                let mut row = vec![r.to_string(), s.portal_count.to_string(), format!("{:.1}", s.mean_total)];
                row.extend(
                    spec_dims.iter().map(|d| format!("{:.1}", s.mean_subtotals.get(d).copied().unwrap_or(0.0))),
                );
                row
            })
            .collect();
        Table { headers, rows }
    }

    pub fn render(&self, spec: &FrameworkSpec, format: ReportFormat) -> String {
        let d = dims(spec);
        match format {
            ReportFormat::Json => json(self),
            ReportFormat::Csv => self.table(&d).csv(),
            ReportFormat::Md => {
                let mut out = String::from("# Region comparison\n\n");
                let _ = writeln!(out, "Framework {}, generated {}\n", self.framework_version, stamp(&self.generated_at));
                out.push_str(&self.table(&d).markdown(1));
                if !self.warnings.is_empty() {
                    out.push('\n');
                    for w in &self.warnings {
                        let _ = writeln!(out, "- warning: {w}");
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::builtin_framework;
    use crate::scoring::{score_total, VerdictSet};

    fn at() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2024-05-01T12:00:00Z").unwrap().to_utc()
    }

    fn score(portal: &str, total: u32, provisional: bool) -> PortalScore {
        PortalScore {
            portal_id: portal.into(),
            framework_version: "1.0.0".into(),
            dimension_subtotals: ('a'..='i').map(|d| (d, if d == 'a' { total } else { 0 })).collect(),
            total,
            provisional,
        }
    }

    #[test]
    fn ranking_lines() {
        let spec = builtin_framework();
        let scores: Vec<PortalScore> =
            [("x", 120), ("y", 100), ("z", 49), ("w", 99)].iter().map(|(p, t)| score(p, *t, false)).collect();
        let r = RankingReport::build(&spec, &scores, Thresholds::default(), at()).unwrap();
        assert_eq!(r.high_line(), "2 portals ≥ 100");
        assert_eq!(r.low_line(), "1 portal < 50");
        let md = r.render(ReportFormat::Md);
        assert!(md.contains("| 1 | x | 120 |"), "{md}");
        assert_eq!(md, r.render(ReportFormat::Md));
        let csv = r.render(ReportFormat::Csv);
        assert!(csv.starts_with("rank,portal,total,a,b,c,d,e,f,g,h,i,status\n1,x,120,"));
        assert!(matches!(RankingReport::build(&spec, &[], Thresholds::default(), at()), Err(ReportError::Empty)));
    }

    #[test]
    fn regions() {
        let spec = builtin_framework();
        let scores = vec![
            (Region::Eu, score("fr", 100, false)),
            (Region::Eu, score("ee", 120, false)),
            (Region::Gcc, score("sa", 110, false)),
            (Region::Gcc, score("qa", 10, true)),
        ];
        let c = RegionComparison::build(&spec, &scores, &[Region::Eu, Region::Gcc, Region::Other], at()).unwrap();
        assert_eq!(c.regions[&Region::Eu].mean_total, 110.0);
        assert_eq!(c.regions[&Region::Gcc].mean_total, 110.0);
        assert_eq!(c.regions[&Region::Gcc].portal_count, 1);
        assert!(c.warnings.iter().any(|w| w.contains("qa")));
        assert!(c.warnings.iter().any(|w| w.contains("other")));

        let only_eu = RegionComparison::build(&spec, &scores[..1], &[Region::Eu, Region::Gcc], at()).unwrap();
        assert_eq!(only_eu.regions.len(), 1);
        assert!(only_eu.warnings.iter().any(|w| w.contains("one region")));

        assert!(matches!(
            RegionComparison::build(&spec, &scores[3..], &[Region::Gcc], at()),
            Err(ReportError::AllRegionsEmpty)
        ));
    }

    #[test]
    fn leaders_ties() {
        let spec = builtin_framework();
        let set = |p: &str, ids: &[&str]| {
            score_total(&spec, &VerdictSet::from_values(p, &spec, spec.sub_dimensions().map(|s| (s.id.clone(), ids.contains(&s.id.as_str()))))).unwrap()
        };
        let scores = vec![set("b", &["a1", "a2", "a3", "a4"]), set("a", &["a1", "a2", "a3", "a4"]), set("c", &["a1"])];
        let l = LeadersReport::build(&spec, &scores, at()).unwrap();
        assert_eq!(l.leaders[0].portals, ["a", "b"]);
        assert_eq!(l.leaders[0].best, 9);
    }

    #[test]
    fn file_names() {
        let d = NaiveDate::from_ymd_opt(2024, 5, 1).unwrap();
        assert_eq!(report_file_name("ranking", "1.0.0", d, ReportFormat::Md), "ranking-1.0.0-2024-05-01.md");
    }
}
