//! Verdict aggregation and weighted scoring.
//!
//! Every sub-dimension receives a Boolean verdict. A portal's total is the sum
//! of passing sub-dimensions multiplied by their weight (1/2/3), grouped into
//! per-dimension subtotals. Everything here is a pure function of its inputs.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exec::Execution;
use crate::framework::{FrameworkSpec, Weight};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("unknown sub-dimension id {0}")]
    UnknownSubDimension(String),
    #[error("empty sample")]
    EmptySample,
    #[error("no assessments")]
    NoAssessments,
}

/// A Boolean verdict, serialized as the integer 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VerdictValue(bool);

impl VerdictValue {
    pub const PASS: VerdictValue = VerdictValue(true);
    pub const FAIL: VerdictValue = VerdictValue(false);

    pub fn new(pass: bool) -> Self {
        VerdictValue(pass)
    }

    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            0 => Some(Self::FAIL),
            1 => Some(Self::PASS),
            _ => None,
        }
    }

    pub fn passed(self) -> bool {
        self.0
    }

    pub fn as_u32(self) -> u32 {
        u32::from(self.0)
    }
}

impl From<bool> for VerdictValue {
    fn from(b: bool) -> Self {
        VerdictValue(b)
    }
}

impl fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u32())
    }
}

impl Serialize for VerdictValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(self.0))
    }
}

impl<'de> Deserialize<'de> for VerdictValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        VerdictValue::from_int(v)
            .ok_or_else(|| serde::de::Error::custom(format!("verdict value must be 0 or 1, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictSource {
    Auto,
    Manual,
    Override,
}

impl VerdictSource {
    /// Manual and override verdicts always supersede automatic ones.
    pub fn is_authoritative(self) -> bool {
        !matches!(self, VerdictSource::Auto)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictSource::Auto => "auto",
            VerdictSource::Manual => "manual",
            VerdictSource::Override => "override",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub sub_dimension_id: String,
    pub value: VerdictValue,
    pub source: VerdictSource,
    #[serde(default)]
    pub evidence_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub recorded_at: DateTime<Utc>,
}

impl Verdict {
    pub fn new(
        sub_dimension_id: impl Into<String>,
        value: impl Into<VerdictValue>,
        source: VerdictSource,
        recorded_at: DateTime<Utc>,
    ) -> Self {
        Verdict {
            sub_dimension_id: sub_dimension_id.into(),
            value: value.into(),
            source,
            evidence_refs: Vec::new(),
            note: None,
            recorded_at,
        }
    }
}

/// Effective verdicts for one portal, at most one per sub-dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSet {
    pub portal_id: String,
    pub framework_version: String,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl VerdictSet {
    pub fn new(portal_id: impl Into<String>, framework_version: impl Into<String>) -> Self {
        VerdictSet {
            portal_id: portal_id.into(),
            framework_version: framework_version.into(),
            verdicts: BTreeMap::new(),
        }
    }

    /// Builds a set of manual verdicts from `(id, pass)` pairs.
    pub fn from_values<I, S>(portal_id: &str, spec: &FrameworkSpec, values: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<String>,
    {
        let mut set = VerdictSet::new(portal_id, &spec.version);
        for (id, pass) in values {
            set.insert(Verdict::new(id, pass, VerdictSource::Manual, DateTime::UNIX_EPOCH));
        }
        set
    }

    pub fn insert(&mut self, verdict: Verdict) {
        self.verdicts.insert(verdict.sub_dimension_id.clone(), verdict);
    }

    pub fn value(&self, id: &str) -> Option<VerdictValue> {
        self.verdicts.get(id).map(|v| v.value)
    }

    pub fn is_complete(&self, spec: &FrameworkSpec) -> bool {
        spec.sub_dimensions().all(|s| self.verdicts.contains_key(&s.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortalScore {
    pub portal_id: String,
    pub framework_version: String,
    pub dimension_subtotals: BTreeMap<char, u32>,
    pub total: u32,
    /// Set when at least one sub-dimension has no verdict (scored as 0).
    pub provisional: bool,
}

pub fn weight_value(weight: Weight) -> u32 {
    weight.value()
}

/// Weighted total of a verdict set. Missing verdicts count as 0 and make the
/// score provisional.
pub fn score_total(spec: &FrameworkSpec, verdicts: &VerdictSet) -> Result<PortalScore, ScoringError> {
    if let Some(unknown) = verdicts.verdicts.keys().find(|id| spec.sub_dimension(id).is_none()) {
        return Err(ScoringError::UnknownSubDimension(unknown.clone()));
    }
    let mut provisional = false;
    let mut subtotals = BTreeMap::new();
    for dim in &spec.dimensions {
        let mut subtotal = 0;
        for sub in &dim.sub_dimensions {
            match verdicts.value(&sub.id) {
                Some(v) => subtotal += v.as_u32() * weight_value(sub.weight),
                None => provisional = true,
            }
        }
        subtotals.insert(dim.id, subtotal);
    }
    Ok(PortalScore {
        portal_id: verdicts.portal_id.clone(),
        framework_version: spec.version.clone(),
        total: subtotals.values().sum(),
        dimension_subtotals: subtotals,
        provisional,
    })
}

/// Scores many verdict sets, in input order.
pub fn score_many(spec: &FrameworkSpec, sets: &[VerdictSet]) -> Vec<Result<PortalScore, ScoringError>> {
    score_many_with(Execution::default(), spec, sets)
}

pub fn score_many_with(
    exec: Execution,
    spec: &FrameworkSpec,
    sets: &[VerdictSet],
) -> Vec<Result<PortalScore, ScoringError>> {
    exec.map(sets, |set| score_total(spec, set))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotConformance {
    pub dataset_id: String,
    pub conforms: bool,
}

/// Conformance counts for one sampled sub-dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledObservation {
    pub sub_dimension_id: String,
    pub sample_size: usize,
    pub conforming_count: usize,
    pub per_slot: Vec<SlotConformance>,
    /// Slot indices dropped from the denominator after manual review.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_slots: Vec<usize>,
}

impl SampledObservation {
    pub fn from_slots(sub_dimension_id: impl Into<String>, per_slot: Vec<SlotConformance>) -> Self {
        SampledObservation {
            sub_dimension_id: sub_dimension_id.into(),
            sample_size: per_slot.len(),
            conforming_count: per_slot.iter().filter(|s| s.conforms).count(),
            per_slot,
            excluded_slots: Vec::new(),
        }
    }
}

/// Smallest conforming count that reaches 70% of `sample_size`, i.e.
/// `ceil(0.7 * n)` computed exactly in integers.
pub fn sampled_threshold(sample_size: usize) -> usize {
    (7 * sample_size).div_ceil(10)
}

pub fn evaluate_sampled(obs: &SampledObservation) -> Result<VerdictValue, ScoringError> {
    if obs.sample_size == 0 {
        return Err(ScoringError::EmptySample);
    }
    Ok(VerdictValue::new(obs.conforming_count >= sampled_threshold(obs.sample_size)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub rank: usize,
    pub portal_id: String,
    pub total: u32,
    pub dimension_subtotals: BTreeMap<char, u32>,
}

/// Standard competition ranking (1, 2, 2, 4) by total, descending. Ties are
/// listed by portal id.
pub fn rank(scores: &[PortalScore]) -> Vec<RankingEntry> {
    let mut sorted: Vec<&PortalScore> = scores.iter().collect();
    sorted.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.portal_id.cmp(&b.portal_id)));
    let mut out: Vec<RankingEntry> = Vec::with_capacity(sorted.len());
    for (i, s) in sorted.iter().enumerate() {
        let rank = match out.last() {
            Some(prev) if prev.total == s.total => prev.rank,
            _ => i + 1,
        };
        out.push(RankingEntry {
            rank,
            portal_id: s.portal_id.clone(),
            total: s.total,
            dimension_subtotals: s.dimension_subtotals.clone(),
        });
    }
    out
}

/// Portals attaining the best subtotal in each dimension. Ties are listed
/// jointly, ordered by portal id.
pub fn dimension_leaders(
    spec: &FrameworkSpec,
    scores: &[PortalScore],
) -> Result<BTreeMap<char, Vec<String>>, ScoringError> {
    if scores.is_empty() {
        return Err(ScoringError::NoAssessments);
    }
    let mut leaders = BTreeMap::new();
    for dim in &spec.dimensions {
        let subtotal = |s: &PortalScore| s.dimension_subtotals.get(&dim.id).copied().unwrap_or(0);
        let best = scores.iter().map(subtotal).max().unwrap_or(0);
        let mut ids: Vec<String> =
            scores.iter().filter(|s| subtotal(s) == best).map(|s| s.portal_id.clone()).collect();
        ids.sort();
        leaders.insert(dim.id, ids);
    }
    Ok(leaders)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRate {
    pub sub_dimension_id: String,
    pub passes: usize,
    pub assessed: usize,
    pub rate: f64,
}

/// Share of portals passing each sub-dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcomingStats {
    /// In framework order.
    pub rates: Vec<PassRate>,
}

impl ShortcomingStats {
    pub fn rate(&self, id: &str) -> Option<f64> {
        self.rates.iter().find(|r| r.sub_dimension_id == id).map(|r| r.rate)
    }

    /// Weakest sub-dimensions first; equal rates keep framework order.
    pub fn ascending(&self) -> Vec<&PassRate> {
        let mut v: Vec<&PassRate> = self.rates.iter().collect();
        v.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        v
    }

    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.rates.iter().map(|r| (r.sub_dimension_id.clone(), r.rate)).collect()
    }
}

pub fn shortcoming_stats(
    spec: &FrameworkSpec,
    verdict_sets: &[VerdictSet],
) -> Result<ShortcomingStats, ScoringError> {
    shortcoming_stats_with(Execution::default(), spec, verdict_sets)
}

pub fn shortcoming_stats_with(
    exec: Execution,
    spec: &FrameworkSpec,
    verdict_sets: &[VerdictSet],
) -> Result<ShortcomingStats, ScoringError> {
    if verdict_sets.is_empty() {
        return Err(ScoringError::NoAssessments);
    }
    let ids: Vec<&str> = spec.sub_dimensions().map(|s| s.id.as_str()).collect();
    let assessed = verdict_sets.len();
    let rates = exec.map(&ids, |id| {
        let passes = verdict_sets
            .iter()
            .filter(|set| set.value(id).is_some_and(VerdictValue::passed))
            .count();
        PassRate {
            sub_dimension_id: (*id).to_string(),
            passes,
            assessed,
            rate: passes as f64 / assessed as f64,
        }
    });
    Ok(ShortcomingStats { rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::builtin_framework;

    fn all(spec: &FrameworkSpec, pass: bool) -> VerdictSet {
        VerdictSet::from_values("p", spec, spec.sub_dimensions().map(|s| (s.id.clone(), pass)))
    }

    fn score(portal: &str, total: u32) -> PortalScore {
        PortalScore {
            portal_id: portal.into(),
            framework_version: "1.0.0".into(),
            dimension_subtotals: BTreeMap::from([('a', total.min(9))]),
            total,
            provisional: false,
        }
    }

    #[test]
    fn all_ones_and_zeros() {
        let spec = builtin_framework();
        assert_eq!(score_total(&spec, &all(&spec, true)).unwrap().total, 176);
        let zero = score_total(&spec, &all(&spec, false)).unwrap();
        assert_eq!(zero.total, 0);
        assert!(!zero.provisional);
    }

    #[test]
    fn multilingualism_only() {
        let spec = builtin_framework();
        let set = VerdictSet::from_values(
            "p",
            &spec,
            spec.sub_dimensions().map(|s| (s.id.clone(), s.id.starts_with('a'))),
        );
        let s = score_total(&spec, &set).unwrap();
        assert_eq!(s.dimension_subtotals[&'a'], 9);
        assert_eq!(s.total, 9);
    }

    #[test]
    fn single_high_verdict() {
        let spec = builtin_framework();
        let set = VerdictSet::from_values("p", &spec, [("c1", true)]);
        let s = score_total(&spec, &set).unwrap();
        assert_eq!(s.total, 3);
        assert!(s.provisional);
    }

    #[test]
    fn unknown_id_rejected() {
        let spec = builtin_framework();
        let set = VerdictSet::from_values("p", &spec, [("z9", true)]);
        assert_eq!(score_total(&spec, &set), Err(ScoringError::UnknownSubDimension("z9".into())));
    }

    #[test]
    fn sampled_examples() {
        let obs = |n, k| SampledObservation {
            sub_dimension_id: "e1".into(),
            sample_size: n,
            conforming_count: k,
            per_slot: vec![],
            excluded_slots: vec![],
        };
        assert_eq!(evaluate_sampled(&obs(14, 10)), Ok(VerdictValue::PASS));
        assert_eq!(evaluate_sampled(&obs(14, 9)), Ok(VerdictValue::FAIL));
        assert_eq!(evaluate_sampled(&obs(10, 7)), Ok(VerdictValue::PASS));
        assert_eq!(evaluate_sampled(&obs(14, 14)), Ok(VerdictValue::PASS));
        assert_eq!(evaluate_sampled(&obs(0, 0)), Err(ScoringError::EmptySample));
    }

    #[test]
    fn threshold_table() {
        // n:      1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20
        let expected = [1, 2, 3, 3, 4, 5, 5, 6, 7, 7, 8, 9, 10, 10, 11, 12, 12, 13, 14, 14];
        for (n, want) in (1..=20).zip(expected) {
            assert_eq!(sampled_threshold(n), want, "n={n}");
        }
    }

    #[test]
    fn ranking_examples() {
        let r = rank(&[score("SaudiArabia", 121), score("France", 138)]);
        assert_eq!(
            r.iter().map(|e| (e.rank, e.portal_id.as_str(), e.total)).collect::<Vec<_>>(),
            [(1, "France", 138), (2, "SaudiArabia", 121)]
        );
        let r = rank(&[score("Z", 40), score("Y", 50), score("X", 50)]);
        assert_eq!(r.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 1, 3]);
        assert_eq!(r[0].portal_id, "X");
        assert!(rank(&[]).is_empty());
    }

    #[test]
    fn leaders() {
        let spec = builtin_framework();
        let one = dimension_leaders(&spec, &[score("solo", 5)]).unwrap();
        assert!(one.values().all(|v| v == &["solo".to_string()]));

        let l = dimension_leaders(&spec, &[score("x", 9), score("y", 7)]).unwrap();
        assert_eq!(l[&'a'], ["x"]);
        let l = dimension_leaders(&spec, &[score("x", 9), score("y", 9)]).unwrap();
        assert_eq!(l[&'a'], ["x", "y"]);
        assert_eq!(dimension_leaders(&spec, &[]), Err(ScoringError::NoAssessments));
    }

    #[test]
    fn shortcomings() {
        let spec = builtin_framework();
        let sets: Vec<_> = [true, true, false, true]
            .iter()
            .map(|&v| VerdictSet::from_values("p", &spec, [("e7", v), ("g8", false)]))
            .collect();
        let stats = shortcoming_stats(&spec, &sets).unwrap();
        assert_eq!(stats.rate("e7"), Some(0.75));
        assert_eq!(stats.rate("g8"), Some(0.0));
        assert_eq!(stats.ascending()[0].rate, 0.0);

        let full = shortcoming_stats(&spec, &[all(&spec, true)]).unwrap();
        assert!(full.rates.iter().all(|r| r.rate == 1.0));
        assert!(shortcoming_stats(&spec, &[]).is_err());
    }

    #[test]
    fn verdict_value_serde() {
        assert_eq!(serde_json::to_string(&VerdictValue::PASS).unwrap(), "1");
        assert!(serde_json::from_str::<VerdictValue>("2").is_err());
        assert_eq!(serde_json::from_str::<VerdictValue>("0").unwrap(), VerdictValue::FAIL);
    }

    #[test]
    fn sequential_matches_default() {
        let spec = builtin_framework();
        let sets = vec![all(&spec, true), all(&spec, false)];
        assert_eq!(
            score_many_with(Execution::Sequential, &spec, &sets),
            score_many(&spec, &sets)
        );
    }
}
