//! Sequential against rayon execution for the data-parallel stages.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use llpd::bench::uniform_square;
use llpd::graph::build_knn_graph;
use llpd::llpd::{knn_llpd_radius, llpd_knn, LadderMode, LlpdIndex};
use llpd::spectral::{sigma_sweep, EigenConfig, SigmaGridSpec};
use llpd::{generate, DatasetKind, Execution, GeneratorSpec};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn knn_graph(c: &mut Criterion) {
    let points = uniform_square(20_000, 0);
    let mut group = c.benchmark_group("knn_graph");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new(name, points.len()), |b| {
            b.iter(|| build_knn_graph(&points, 20, exec).unwrap())
        });
    }
    group.finish();
}

fn neighbor_sweep(c: &mut Criterion) {
    let points = uniform_square(20_000, 1);
    let index = LlpdIndex::build(&points, 20, LadderMode::Exp, 20, Execution::Parallel).unwrap();
    let mut group = c.benchmark_group("llpd_knn");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new(name, points.len()), |b| {
            b.iter(|| llpd_knn(&index.sorted, &index.ladder, 10, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("{name}_radius"), points.len()), |b| {
            b.iter(|| knn_llpd_radius(&index.sorted, &index.ladder, 20, exec).unwrap())
        });
    }
    group.finish();
}

fn eigen_sweep(c: &mut Criterion) {
    let data = generate(&GeneratorSpec::new(DatasetKind::NineGaussians)).unwrap();
    let index = LlpdIndex::build(&data.points, 20, LadderMode::Exp, 20, Execution::Parallel).unwrap();
    let sigmas = SigmaGridSpec::default().resolve(&index.ladder, &index.dendrogram).unwrap();
    let config = EigenConfig::sweep();
    let mut group = c.benchmark_group("sigma_sweep");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::new(name, sigmas.len()), |b| {
            b.iter(|| sigma_sweep(&index.dendrogram, &index.ladder, &sigmas, 12, &config, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, knn_graph, neighbor_sweep, eigen_sweep);
criterion_main!(benches);
