use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oda_core::catalog::{run_sampled_checks_with, CheckRules, DatasetRecord, Sample, SampleSlot, SlotOrigin};
use oda_core::exec::Execution;
use oda_core::scoring::{score_many_with, shortcoming_stats_with};
use oda_core::{builtin_framework, FrameworkSpec, VerdictSet};

fn verdict_sets(spec: &FrameworkSpec, n: usize) -> Vec<VerdictSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| {
            let values: Vec<(String, bool)> = spec.sub_dimensions().map(|s| (s.id.clone(), rng.random())).collect();
            VerdictSet::from_values(&format!("p{i}"), spec, values)
        })
        .collect()
}

fn samples(n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..n)
        .map(|p| Sample {
            portal_id: format!("p{p}"),
            slots: (0..14)
                .map(|i| {
                    let mut d = DatasetRecord::new(format!("p{p}-d{i}"));
                    d.title = format!("dataset {i}");
                    d.description = "x".repeat(rng.random_range(0..40));
                    d.update_frequency = Some(["monthly", "annual", "unknown"][i % 3].into());
                    d.modified = chrono::NaiveDate::from_ymd_opt(2024, rng.random_range(1..=12), 1);
                    SampleSlot { dataset: d.normalize(), origin: SlotOrigin::FirstDefault }
                })
                .collect(),
        })
        .collect()
}

fn execs() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn bench(c: &mut Criterion) {
    let spec = builtin_framework();
    let sets = verdict_sets(&spec, 5_000);
    let rules = CheckRules::new(chrono::NaiveDate::from_ymd_opt(2024, 12, 15).unwrap()).with_framework(&spec);
    let samples = samples(200);

    let mut g = c.benchmark_group("score_many");
    for (name, exec) in execs() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| score_many_with(exec, &spec, &sets)));
    }
    g.finish();

    let mut g = c.benchmark_group("shortcoming_stats");
    for (name, exec) in execs() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| shortcoming_stats_with(exec, &spec, &sets)));
    }
    g.finish();

    let mut g = c.benchmark_group("sampled_checks");
    for (name, exec) in execs() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| samples.iter().map(|s| run_sampled_checks_with(exec, &rules, s)).collect::<Vec<_>>())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
