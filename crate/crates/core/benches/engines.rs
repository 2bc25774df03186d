use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use theon::density::{exact_distribution, ExactLimits};
use theon::exec::{set_parallelism, Parallelism};
use theon::peon::{gallery, GalleryParams};
use theon::sampler::sample_histogram;
use theon::space::VertexSet;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn sampling(c: &mut Criterion) {
    let twist = gallery("twist_graph", &GalleryParams::default()).unwrap();
    let v = VertexSet::range(6);
    let mut group = c.benchmark_group("sample_histogram");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, "twist_graph/6/20000"), |b| {
            set_parallelism(mode);
            b.iter(|| sample_histogram(&twist, &v, None, black_box(20_000), 1).unwrap());
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let disc = gallery("disc_3hypergraph", &GalleryParams::default()).unwrap();
    let v = VertexSet::range(4);
    let limits = ExactLimits::default();
    let mut group = c.benchmark_group("exact_distribution");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, "disc_3hypergraph/4"), |b| {
            set_parallelism(mode);
            b.iter(|| exact_distribution(black_box(&disc), &v, None, &limits).unwrap());
        });
    }
    group.finish();
    set_parallelism(Parallelism::Parallel);
}

criterion_group!(benches, sampling, exact);
criterion_main!(benches);
