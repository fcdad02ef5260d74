use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bessel_riesz::grid::apply_semigroup;
use bessel_riesz::heat::{delta_heat_kernel_nd, heat_kernel_1d};
use bessel_riesz::riesz::{riesz_apply, riesz_kernel};
use bessel_riesz::special::{besseli, BesselOrder};
use bessel_riesz::{KernelPoint, MultiIndex, NuVector, SubordinationPlan};
use bessel_riesz_bench::{bump, log_cube};

fn special(c: &mut Criterion) {
    let mut g = c.benchmark_group("besseli");
    let order = BesselOrder::new(1.3).unwrap();
    // small and moderate arguments use the series, large ones the expansion
    for z in [0.05, 4.0, 200.0] {
        g.bench_with_input(BenchmarkId::from_parameter(z), &z, |b, &z| {
            b.iter(|| besseli(order, black_box(z)).unwrap())
        });
    }
    g.finish();
}

fn heat(c: &mut Criterion) {
    c.bench_function("heat_kernel_1d", |b| {
        b.iter(|| heat_kernel_1d(black_box(0.7), 0.3, 1.2, 1.5).unwrap())
    });
    let nu = NuVector::new(vec![0.7, 1.5, 2.0]).unwrap();
    let q = KernelPoint::new(0.4, vec![1.0, 2.0, 0.5], vec![1.3, 1.8, 0.9]).unwrap();
    c.bench_function("delta_heat_kernel_3d", |b| {
        b.iter(|| delta_heat_kernel_nd(&nu, black_box(&[2, 1, 0]), &q).unwrap())
    });
}

fn riesz(c: &mut Criterion) {
    let nu = NuVector::new(vec![0.7, 1.2]).unwrap();
    let k = MultiIndex::new(vec![1, 1]).unwrap();
    let plan = SubordinationPlan::default();
    c.bench_function("riesz_kernel_2d", |b| {
        b.iter(|| riesz_kernel(&nu, &k, black_box(&[1.0, 2.0]), &[1.4, 2.5], &plan).unwrap())
    });

    let mut g = c.benchmark_group("grid");
    g.sample_size(10);
    let nu1 = NuVector::new(vec![0.7]).unwrap();
    for nodes in [200, 400] {
        let f = bump(log_cube(nodes, 1));
        g.bench_with_input(BenchmarkId::new("semigroup_1d", nodes), &f, |b, f| {
            b.iter(|| apply_semigroup(&nu1, 0.5, f).unwrap())
        });
    }
    let f = bump(log_cube(200, 1));
    let k1 = MultiIndex::new(vec![1]).unwrap();
    g.bench_function("riesz_apply_1d", |b| {
        b.iter(|| riesz_apply(&nu1, &k1, &f, &plan).unwrap())
    });
    let f2 = bump(log_cube(60, 2));
    g.bench_function("semigroup_2d", |b| {
        b.iter(|| apply_semigroup(&nu, 0.5, &f2).unwrap())
    });
    g.finish();
}

criterion_group!(benches, special, heat, riesz);
criterion_main!(benches);
