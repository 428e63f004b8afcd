//! Acceptance suite: one PASS/FAIL line per criterion, each with its own
//! pinned time limit. Exits non-zero when any criterion fails.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the end-to-end golden files.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

use oda_core::catalog::{check_update_frequency, draw_sample, Conformance, DatasetRecord, Sample, SlotOrigin};
use oda_core::report::{RankingReport, Thresholds};
use oda_core::scoring::{evaluate_sampled, rank, SampledObservation, SlotConformance};
use oda_core::store::{Assessment, AssessmentStatus, ExportFormat, PortalProfile, Region, Store};
use oda_core::web::{accessibility_passes, ingest_accessibility_report, load_time_passes, LoadMeasurement};
use oda_core::{builtin_framework, score_total, PortalScore, Verdict, VerdictSet, VerdictSource};
use oda_probe::{ProbeConfig, Prober};
use oda_testkit::{oracle, FixtureServer, PortalFixture};

use common::{call, describe, oda, stdout, ApiServer};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { name: "registry-arithmetic", limit: Duration::from_secs(1), run: registry_arithmetic },
    Criterion { name: "scoring-oracle", limit: Duration::from_secs(5), run: scoring_oracle },
    Criterion { name: "threshold-law", limit: Duration::from_secs(1), run: threshold_law },
    Criterion { name: "sampling", limit: Duration::from_secs(10), run: sampling },
    Criterion { name: "frequency-rule", limit: Duration::from_secs(1), run: frequency_rule },
    Criterion { name: "gates", limit: Duration::from_secs(30), run: gates },
    Criterion { name: "ranking-fixture", limit: Duration::from_secs(1), run: ranking_fixture },
    Criterion { name: "round-trip", limit: Duration::from_secs(5), run: round_trip },
    Criterion { name: "end-to-end", limit: Duration::from_secs(60), run: end_to_end },
];

fn main() {
    let mut failures = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit")),
            Err(e) => (false, e),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:<20} {:>8.3}s (limit {}s)  {}",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    println!("{} criteria, {} failed", CRITERIA.len(), failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

fn registry_arithmetic() -> Outcome {
    let spec = builtin_framework();
    ensure!(spec.len() == 72, "{} sub-dimensions", spec.len());
    let all: BTreeMap<String, bool> = spec.sub_dimensions().map(|s| (s.id.clone(), true)).collect();
    let total = score_total(&spec, &VerdictSet::from_values("all", &spec, all.clone())).map_err(|e| e.to_string())?.total;
    ensure!(total == 176, "all-ones total {total}");
    let maxima: Vec<u32> = spec.dimension_maxima().values().copied().collect();
    ensure!(maxima == [9, 7, 9, 26, 25, 37, 32, 17, 14], "maxima {maxima:?}");
    let brute: Vec<u32> = oracle::dimension_maxima().values().copied().collect();
    ensure!(brute == maxima, "oracle maxima {brute:?}");
    ensure!(oracle::naive_total(&all) == 176, "oracle all-ones total");
    Ok(format!("72 sub-dimensions, all-ones 176, maxima {maxima:?}"))
}

fn scoring_oracle() -> Outcome {
    let spec = builtin_framework();
    let ids = oracle::all_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c0e);
    for case in 0..1000 {
        let p = rng.random_range(0.0..=1.0);
        let v: BTreeMap<String, bool> = ids.iter().map(|id| (id.clone(), rng.random_bool(p))).collect();
        let engine = score_total(&spec, &VerdictSet::from_values("x", &spec, v.clone())).map_err(|e| e.to_string())?;
        let naive = oracle::naive_total(&v);
        ensure!(engine.total == naive, "case {case}: engine {} oracle {naive}", engine.total);
        for (d, sub) in &engine.dimension_subtotals {
            ensure!(*sub == oracle::naive_dimension_total(&v, *d), "case {case}: dimension {d}");
        }
    }
    Ok("1000 random vectors, exact match".into())
}

fn observation(n: usize, k: usize) -> SampledObservation {
    let slots = (0..n).map(|i| SlotConformance { dataset_id: format!("d{i}"), conforms: i < k }).collect();
    SampledObservation::from_slots("e1", slots)
}

fn threshold_law() -> Outcome {
    let mut checked = 0;
    for n in 1..=28 {
        for k in 0..=n {
            let got = evaluate_sampled(&observation(n, k)).map_err(|e| e.to_string())?.passed();
            ensure!(got == (k >= oracle::sampled_threshold(n)), "n {n} k {k}: {got}");
            checked += 1;
        }
    }
    let pass = |k| evaluate_sampled(&observation(14, k)).unwrap().passed();
    ensure!(pass(10) && !pass(9), "10/14 must pass and 9/14 fail");
    Ok(format!("{checked} (n, k) pairs; 10/14 pass, 9/14 fail"))
}

fn rt() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap()
}

fn fast_prober() -> Prober {
    Prober::new(ProbeConfig { delay: Duration::from_millis(1), timeout: Duration::from_secs(10), ..Default::default() })
        .unwrap()
}

fn draw(server: &FixtureServer) -> Result<Sample, String> {
    rt().block_on(async {
        let p = fast_prober();
        let det = p.detect_platform(&[server.base_url()]).await;
        let snap = p.fetch_catalog_snapshot("fx", &det, Utc::now()).await.map_err(|e| e.to_string())?;
        draw_sample(&snap).map_err(|e| e.to_string())
    })
}

fn composition(s: &Sample) -> Vec<usize> {
    SlotOrigin::ALL.iter().map(|o| s.origin_count(*o)).filter(|n| *n > 0).collect()
}

fn sampling() -> Outcome {
    let cases = [((true, true), vec![4, 3, 4, 3]), ((false, true), vec![8, 6]), ((false, false), vec![8, 6])];
    for ((rel, modi), expected) in cases {
        let server = FixtureServer::start(PortalFixture::ckan(30).sorts(rel, modi));
        let first = draw(&server)?;
        ensure!(first.len() == 14, "{} slots", first.len());
        ensure!(composition(&first) == expected, "sorts {rel}/{modi}: {:?}", composition(&first));
        for run in 1..10 {
            ensure!(draw(&server)? == first, "sorts {rel}/{modi}: run {run} differs");
        }
    }
    Ok("(4,3,4,3), (8,6), (8,6); 10 identical runs each".into())
}

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn e4(freq: Option<&str>, modified: Option<NaiveDate>, reference: NaiveDate) -> Conformance {
    let mut r = DatasetRecord::new("x");
    r.update_frequency = freq.map(str::to_string);
    r.modified = modified;
    check_update_frequency(&r, reference).conformance
}

fn frequency_rule() -> Outcome {
    use Conformance::*;
    let r = d(2024, 3, 15);
    let table = [
        (Some("monthly"), Some(d(2024, 3, 1)), Conforms),
        (Some("monthly"), Some(d(2024, 2, 1)), Conforms),
        (Some("monthly"), Some(d(2024, 1, 31)), NotConforming),
        (Some("unknown"), Some(d(2015, 1, 1)), Conforms),
        (Some("irregular"), None, Conforms),
        (Some("monthly"), None, NotConforming),
        (Some("annual"), None, NotConforming),
        (None, Some(d(2024, 3, 15)), NotConforming),
    ];
    for (freq, modified, expected) in table {
        let got = e4(freq, modified, r);
        ensure!(got == expected, "{freq:?} {modified:?}: {got:?}");
    }
    let terms = ["daily", "weekly", "biweekly", "monthly", "quarterly", "semiannual", "annual"];
    let mut rows = 0;
    let mut reference = d(2024, 1, 1);
    while reference <= d(2024, 12, 31) {
        for term in terms {
            let start = oracle::earliest_conforming(term, reference).expect("dated term");
            let before = start.pred_opt().unwrap();
            ensure!(e4(Some(term), Some(start), reference) == Conforms, "{term} {reference} at {start}");
            ensure!(e4(Some(term), Some(before), reference) == NotConforming, "{term} {reference} at {before}");
            rows += 1;
        }
        reference = reference.succ_opt().unwrap();
    }
    Ok(format!("{} table rows, {rows} generated period boundaries", table.len()))
}

fn gates() -> Outcome {
    for (ms, expected) in [(3999, true), (4000, false), (4001, false)] {
        ensure!(load_time_passes(ms) == expected, "median {ms}");
        let m = LoadMeasurement::from_attempts("u", vec![ms, ms - 1, ms + 1], vec![]).unwrap();
        ensure!(m.median_ms == ms && m.passed == expected, "attempts around {ms}: {m:?}");
    }
    for score in [70u32, 71] {
        for critical in [0u32, 1] {
            let expected = score >= 71 && critical == 0;
            ensure!(accessibility_passes(score as f64, critical) == expected, "{score}/{critical}");
            let doc = json!({"source": "t", "score": score, "critical_issue_count": critical}).to_string();
            let r = ingest_accessibility_report(&doc, Utc::now()).map_err(|e| e.to_string())?;
            ensure!(r.passes() == expected, "ingested {score}/{critical}");
        }
    }
    // injected delays on a fixture homepage
    let fast = FixtureServer::start(PortalFixture::ckan(1).home_delay(Duration::from_millis(300)));
    let slow = FixtureServer::start(PortalFixture::ckan(1).home_delay(Duration::from_millis(4100)));
    let (fast_url, slow_url) = (fast.base_url(), slow.base_url());
    let (f, s) = rt().block_on(async {
        let p = fast_prober();
        tokio::join!(p.measure_load_time(&fast_url), p.measure_load_time(&slow_url))
    });
    let (f, s) = (f.measurement.ok_or("fast fixture unmeasured")?, s.measurement.ok_or("slow fixture unmeasured")?);
    ensure!(f.attempts.len() == 3 && f.median_ms >= 300 && f.passed, "300 ms fixture: {f:?}");
    ensure!(s.attempts.len() == 3 && s.median_ms >= 4100 && !s.passed, "4100 ms fixture: {s:?}");
    Ok(format!("c1 at 3999/4000/4001, c4 at 70/71 x 0/1; fixture medians {} and {} ms", f.median_ms, s.median_ms))
}

fn constructed(portal: &str, total: u32, seed: u64) -> Result<PortalScore, String> {
    let spec = builtin_framework();
    let v = oracle::vector_with_total(total, seed).ok_or(format!("no vector for {total}"))?;
    score_total(&spec, &VerdictSet::from_values(portal, &spec, v)).map_err(|e| e.to_string())
}

fn ranking_fixture() -> Outcome {
    let a = constructed("france-like", 138, 1)?;
    let b = constructed("saudi-like", 121, 2)?;
    let ranked = rank(&[b, a]);
    ensure!(ranked[0].portal_id == "france-like" && ranked[0].rank == 1, "first {:?}", ranked[0]);
    ensure!(ranked[1].portal_id == "saudi-like" && ranked[1].rank == 2, "second {:?}", ranked[1]);
    let gap = ranked[0].total - ranked[1].total;
    ensure!(gap == 17, "gap {gap}");

    let totals = [138, 121, 119, 112, 110, 108, 105, 104, 103, 101, 100, 99];
    let scores =
        totals.iter().enumerate().map(|(i, t)| constructed(&format!("p{i:02}"), *t, i as u64)).collect::<Result<Vec<_>, _>>()?;
    let report = RankingReport::build(&builtin_framework(), &scores, Thresholds::default(), Utc::now()).map_err(|e| e.to_string())?;
    ensure!(report.high_line() == "11 portals ≥ 100", "{}", report.high_line());
    Ok(format!("138 and 121 rank 1 and 2, gap {gap}; \"{}\"", report.high_line()))
}

fn random_assessment(seed: u64) -> (PortalProfile, Assessment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0: DateTime<Utc> = "2024-04-02T09:00:00Z".parse().unwrap();
    let portal = format!("p{seed}");
    let mut a = Assessment {
        assessment_id: format!("{portal}-1"),
        portal_id: portal.clone(),
        framework_version: builtin_framework().version,
        status: AssessmentStatus::InProgress,
        reference_date: t0.date_naive(),
        verdict_log: Vec::new(),
        evidence: BTreeMap::new(),
        created_at: t0,
        updated_at: t0,
    };
    let complete = rng.random_bool(0.3);
    let mut clock = t0;
    for sub in oracle::all_ids() {
        if !complete && rng.random_bool(0.2) {
            continue;
        }
        for _ in 0..rng.random_range(1..4) {
            clock += chrono::Duration::seconds(1);
            let source = [VerdictSource::Auto, VerdictSource::Manual, VerdictSource::Override][rng.random_range(0..3)];
            let mut v = Verdict::new(sub.clone(), rng.random_bool(0.5), source, clock);
            if rng.random_bool(0.1) {
                v.note = Some("checked, \"twice\"".into());
            }
            a.verdict_log.push(v);
        }
    }
    if complete {
        a.status = AssessmentStatus::Complete;
    }
    let profile = PortalProfile {
        portal_id: portal,
        name: format!("Portal {seed}"),
        country: String::new(),
        region: Region::Other,
        homepage: "http://p.test/".into(),
        catalog_endpoints: Vec::new(),
        notes: String::new(),
    };
    (profile, a)
}

fn export_doc(p: &PortalProfile, a: &Assessment) -> String {
    json!({"format": "oda-assessment", "format_version": 1, "portal": p, "assessment": a}).to_string()
}

fn round_trip() -> Outcome {
    let spec = builtin_framework();
    let (a_dir, b_dir) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (first, second) = (Store::open(a_dir.path()).unwrap(), Store::open(b_dir.path()).unwrap());
    for seed in 0..100 {
        let (p, original) = random_assessment(seed);
        let imported = first.import_assessment(&export_doc(&p, &original)).map_err(|e| e.to_string())?;
        let exported = first.export_assessment(&imported.assessment_id, ExportFormat::Json).map_err(|e| e.to_string())?;
        let back = second.import_assessment(&exported).map_err(|e| e.to_string())?;
        ensure!(back.effective_verdicts() == original.effective_verdicts(), "seed {seed}: effective verdicts differ");
        ensure!(back.score(&spec).unwrap() == original.score(&spec).unwrap(), "seed {seed}: score differs");
    }
    Ok("100 randomized assessments, verdicts and scores identical".into())
}

fn golden(name: &str, actual: &str) -> Result<(), String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(0) + 1;
        return Err(format!("{name} differs from golden file at line {line}:\n{actual}"));
    }
    Ok(())
}

const MANUAL_FAILS: [&str; 3] = ["a2", "g13", "i6"];

fn end_to_end() -> Outcome {
    let fixture = FixtureServer::start(PortalFixture::ckan(30).with_sparql());
    let dir = TempDir::new().unwrap();
    let s = dir.path();
    let base = fixture.base_url();
    let run = |args: &[&str]| -> Result<String, String> {
        let o = oda(s, args);
        ensure!(o.status.success(), "{args:?}: {}", describe(&o));
        Ok(stdout(&o))
    };
    run(&["portal", "add", "--id", "fx", "--name", "Fixture Portal", "--region", "EU", "--homepage", &base, "--endpoint", &base])?;
    run(&["portal", "add", "--id", "gx", "--name", "Gulf Fixture", "--region", "GCC", "--homepage", "http://gx.test/"])?;
    let report_file = s.join("a11y.json");
    std::fs::write(&report_file, r#"{"source": "fixture-checker", "score": 82, "critical_issue_count": 0}"#).unwrap();
    let probed = run(&["probe", "fx", "--accessibility-report", report_file.to_str().unwrap()])?;
    for name in ["load_time", "catalog", "health", "accessibility", "endpoints"] {
        ensure!(probed.contains(&format!(" {name} ok")), "{name} probe: {probed}");
    }

    let api = ApiServer::start(s);
    let shown = call("GET", &api.url("/api/assessments/fx-1"), None);
    ensure!(shown.status == 200, "GET assessment {}", shown.status);
    let auto: BTreeMap<String, Value> = serde_json::from_value(shown.body["effective_verdicts"].clone()).unwrap();
    for id in ["c1", "c3", "c4", "e1", "e2", "e3", "e4", "f10", "f11", "f12", "f13"] {
        ensure!(auto.get(id).is_some_and(|v| v["source"] == "auto"), "{id} not auto-filled");
    }
    let verdicts = api.url("/api/assessments/fx-1/verdicts");
    for id in oracle::all_ids().into_iter().filter(|id| !auto.contains_key(id)) {
        let value = if MANUAL_FAILS.contains(&id.as_str()) { 0 } else { 1 };
        let r = call("POST", &verdicts, Some(json!({"id": id, "value": value, "source": "manual"})));
        ensure!(r.status == 200, "verdict {id}: {}", r.status);
    }
    let fin = call("POST", &api.url("/api/assessments/fx-1/finalize"), None);
    ensure!(fin.status == 200, "finalize {}: {}", fin.status, fin.body);

    let gx = call("POST", &api.url("/api/assessments"), Some(json!({"portal_id": "gx"})));
    ensure!(gx.status == 201, "create gx {}", gx.status);
    for id in ["a1", "a2", "a3", "a4", "b1"] {
        call("POST", &api.url("/api/assessments/gx-1/verdicts"), Some(json!({"id": id, "value": 1})));
    }

    let api_score: PortalScore = serde_json::from_value(call("GET", &api.url("/api/assessments/fx-1/score"), None).body)
        .map_err(|e| e.to_string())?;
    let cli_score: PortalScore =
        serde_json::from_str(&run(&["score", "fx", "--format", "json"])?).map_err(|e| e.to_string())?;
    ensure!(api_score == cli_score, "CLI {cli_score:?} vs API {api_score:?}");
    ensure!(!cli_score.provisional, "fx still provisional");

    let ranking = run(&["rank"])?;
    ensure!(ranking.contains("| 1 | fx |") && ranking.contains("| 2 | gx |"), "{ranking}");
    golden("e2e-ranking.md", &ranking)?;
    let portal = run(&["report", "portal", "fx"])?;
    golden("e2e-portal.md", &portal)?;
    for kind in ["leaders", "shortcomings", "regions"] {
        run(&["report", kind, "--format", "csv"])?;
    }
    Ok(format!("fx total {} / 176, reports match golden files", cli_score.total))
}
