use std::hint::black_box;

use convex_bench::fixture;
use convex_core::covering::{volumetric_covering_bounds, CoverOptions};
use convex_core::models::{ball, cross_polytope};
use convex_core::positions::{isotropic_position, santalo_position};
use convex_core::subspace::{random_subspace, section};
use convex_core::volume::{exact_volume, mc_volume};
use convex_core::BodyHandle;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn fresh(k: &BodyHandle) -> BodyHandle {
    // Drop the cached double description so each iteration recomputes it.
    BodyHandle::from_file(&k.to_file()).unwrap()
}

fn double_description(c: &mut Criterion) {
    let mut g = c.benchmark_group("double_description");
    for n in [3, 5, 7] {
        let k = fixture(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &k, |b, k| b.iter(|| black_box(fresh(k).polar().unwrap())));
    }
    g.finish();
}

fn volume(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_volume");
    for n in [3, 5, 7] {
        let k = fixture(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &k, |b, k| b.iter(|| black_box(exact_volume(&fresh(k)).unwrap())));
    }
    g.finish();
    let s = cross_polytope(5).unwrap();
    c.bench_function("mc_volume/cross5/1e4", |b| b.iter(|| black_box(mc_volume(&s, 10_000, 3).unwrap())));
}

fn positions(c: &mut Criterion) {
    let mut g = c.benchmark_group("santalo_position");
    for n in [2, 4, 6] {
        let k = fixture(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &k, |b, k| b.iter(|| black_box(santalo_position(k).unwrap())));
    }
    g.finish();
    let k = fixture(5, 4);
    c.bench_function("isotropic_position/5", |b| b.iter(|| black_box(isotropic_position(&k).unwrap())));
}

fn sections_and_covering(c: &mut Criterion) {
    let k = fixture(6, 5);
    let f = random_subspace(6, 3, 9).unwrap();
    c.bench_function("section/6->3", |b| b.iter(|| black_box(section(&k, &f, None).unwrap())));
    let k = fixture(3, 6);
    let l = ball(3);
    let opts = CoverOptions { samples: 10_000, seed: 1 };
    c.bench_function("volumetric_covering/3/ball", |b| b.iter(|| black_box(volumetric_covering_bounds(&k, &l, 0.5, opts).unwrap())));
}

criterion_group!(benches, double_description, volume, positions, sections_and_covering);
criterion_main!(benches);
