use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncdist_bench::{dense_element, torus_element};
use ncdist_core::{
    basis_state, bound_b, commutator_norm, optimize_distance, star, torus_op_norm, zeta_state, OptimizerParams,
};
use std::hint::black_box;

fn star_product(c: &mut Criterion) {
    let mut group = c.benchmark_group("star");
    for order in [16, 64, 128] {
        let (a, b) = (dense_element(1.0, order), dense_element(1.0, order));
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, _| {
            bench.iter(|| star(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn commutator(c: &mut Criterion) {
    let mut group = c.benchmark_group("commutator_norm");
    for order in [16, 64, 128] {
        let a = dense_element(1.0, order);
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, _| {
            bench.iter(|| commutator_norm(black_box(&a)))
        });
    }
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_distance");
    group.sample_size(10);
    let (s1, s2) = (basis_state(0, 1.0).unwrap(), basis_state(3, 1.0).unwrap());
    for order in [8, 16] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, &order| {
            bench.iter(|| optimize_distance(&s1, &s2, order, &OptimizerParams::default(), None).unwrap())
        });
    }
    group.finish();
}

fn probe_sum(c: &mut Criterion) {
    let mut group = c.benchmark_group("bound_b");
    let ground = basis_state(0, 1.0).unwrap();
    for m0 in [10_000_u64, 1_000_000] {
        let z = zeta_state(1.2, 100 * m0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m0), &m0, |bench, &m0| {
            bench.iter(|| bound_b(black_box(m0), &ground, &z).unwrap())
        });
    }
    group.finish();
}

fn torus_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("torus_op_norm");
    group.sample_size(10);
    let a = torus_element(0.37, 2);
    for radius in [4, 8, 16] {
        group.bench_with_input(BenchmarkId::from_parameter(radius), &radius, |bench, &radius| {
            bench.iter(|| torus_op_norm(black_box(&a), radius).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, star_product, commutator, optimizer, probe_sum, torus_norm);
criterion_main!(benches);
