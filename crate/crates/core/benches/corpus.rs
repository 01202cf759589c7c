//! Sequential versus data-parallel execution on the seeded corpora.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use zigzag_core::equivariance::pipeline::{run_pipeline, PipelineOptions};
use zigzag_core::par::Exec;
use zigzag_core::suite::{cardy_corpus, pipeline_corpus};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn cardy(c: &mut Criterion) {
    let mut group = c.benchmark_group("cardy_corpus");
    group.sample_size(10);
    for size in [25usize, 100] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, size), &size, |b, &size| {
                b.iter(|| black_box(cardy_corpus(size, 5, 4, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let objects: Vec<_> = pipeline_corpus(8, 11)
        .iter()
        .map(|i| (i.name(), i.build().unwrap()))
        .collect();
    let opts = PipelineOptions::default();
    let mut group = c.benchmark_group("pipeline_corpus");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                black_box(exec.map(&objects, |(n, c)| {
                    run_pipeline(n, c, &opts).unwrap().passed()
                }))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, cardy, pipeline);
criterion_main!(benches);
