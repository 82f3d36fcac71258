//! Parallel versus sequential analysis over a synthetic corpus.

#[path = "../tests/support/mod.rs"]
mod support;

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use leaklint::catalog::load_catalog;
use leaklint::engine::{analyze_paths, Execution, LintConfig};

fn engine(c: &mut Criterion) {
    let dir = tempfile::tempdir().expect("temp dir");
    let lines = support::synth_corpus(dir.path(), 100, 200);
    let paths = vec![dir.path().to_path_buf()];
    let catalog = load_catalog();

    let mut group = c.benchmark_group("analyze_paths");
    group.throughput(Throughput::Elements(lines as u64));
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let config = LintConfig {
            execution,
            ..LintConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| black_box(analyze_paths(&paths, catalog, &config))));
    }
    group.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
