use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nhc_core::{abc_batch, make_blobs, nhc_batch, pgd_attack, AbcConfig, Centers, MlpModel, NoiseSpec, PgdConfig};
use std::hint::black_box;

fn setup(dim: usize) -> (MlpModel, nhc_core::LabeledDataset) {
    let data = make_blobs(3, 100, &Centers::Auto { dim }, 0.5, 1).unwrap();
    let model = MlpModel::new(&[dim, 32, 32, 3], 1).unwrap();
    (model, data)
}

fn bench_nhc(c: &mut Criterion) {
    let mut group = c.benchmark_group("nhc_batch");
    for dim in [2, 64] {
        let (model, data) = setup(dim);
        let spec = NoiseSpec::default();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| nhc_batch(&model, black_box(data.points()), &spec).unwrap())
        });
    }
    group.finish();
}

fn bench_abc(c: &mut Criterion) {
    let (model, data) = setup(64);
    let cfg = AbcConfig::for_layout(data.layout(), 7, 1, 0.4);
    c.bench_function("abc_batch/64", |b| {
        b.iter(|| abc_batch(&model, black_box(data.points()), &cfg).unwrap())
    });
}

fn bench_forward(c: &mut Criterion) {
    let (model, data) = setup(64);
    c.bench_function("forward/300x64", |b| {
        b.iter(|| model.forward(black_box(data.points())).unwrap())
    });
}

fn bench_pgd(c: &mut Criterion) {
    let (model, data) = setup(64);
    let cfg = PgdConfig::with_epsilon(0.1);
    let x = &data.points()[0];
    let y = data.labels().unwrap()[0];
    c.bench_function("pgd/20_steps", |b| {
        b.iter(|| pgd_attack(&model, black_box(x), y, &cfg).unwrap())
    });
}

criterion_group!(benches, bench_nhc, bench_abc, bench_forward, bench_pgd);
criterion_main!(benches);
