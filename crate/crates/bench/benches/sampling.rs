use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levyest_bench::{compound_poisson, cp_geometry};
use levyest_core::rng::SeedProvenance;
use levyest_core::simulate::{DecomposedSampler, ExactSampler, SmallJumpPolicy};
use levyest_core::{LevyModel, TruncationGeometry};

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_10k");
    for (name, m) in [
        ("compound_poisson", compound_poisson()),
        ("gamma", LevyModel::gamma()),
        ("cauchy", LevyModel::cauchy()),
        ("inverse_gaussian", LevyModel::inverse_gaussian()),
    ] {
        let s = ExactSampler::new(&m, 0.01).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| s.sample(10_000, SeedProvenance::new(1, 0)).unwrap())
        });
    }
    group.finish();
}

fn decomposed(c: &mut Criterion) {
    let mut group = c.benchmark_group("decomposed_10k");
    let stable = LevyModel::stable(0.5).unwrap();
    let g = TruncationGeometry::new(1.0, 10.0).unwrap();
    let s = DecomposedSampler::new(&stable, &g, &SmallJumpPolicy::default_for(1.0), 0.01).unwrap();
    group.bench_function("stable_0.5", |b| b.iter(|| s.sample(10_000, SeedProvenance::new(1, 0)).unwrap()));
    let cp = compound_poisson();
    let s = DecomposedSampler::new(&cp, &cp_geometry(), &SmallJumpPolicy::default_for(1.0), 0.01).unwrap();
    group.bench_function("compound_poisson", |b| b.iter(|| s.sample(10_000, SeedProvenance::new(1, 0)).unwrap()));
    group.finish();
}

criterion_group!(benches, exact, decomposed);
criterion_main!(benches);
