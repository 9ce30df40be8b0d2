use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use privrec_core::exact::{ExactConfig, ExactIndex};
use privrec_core::lsh::{LshIndex, LshParams};
use privrec_core::par::Exec;
use privrec_core::synth::{gen_synthetic, SyntheticSpec};

const STRATEGIES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn index_builds(c: &mut Criterion) {
    let db = gen_synthetic(&SyntheticSpec { rules: 20_000, universe: 10_000, seed: 1, ..Default::default() }).unwrap();
    let mut group = c.benchmark_group("build");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new("exact", name), &exec, |b, &exec| {
            b.iter(|| ExactIndex::build(black_box(&db), &ExactConfig::with_seed(7), exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lsh", name), &exec, |b, &exec| {
            b.iter(|| LshIndex::from_db(black_box(&db), LshParams::default_schedule(7), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, index_builds);
criterion_main!(benches);
