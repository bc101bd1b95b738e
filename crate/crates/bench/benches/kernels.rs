use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use norm_descent::analysis::{linf_bruteforce, SmoothnessReport};
use norm_descent::matrix::eigh;
use norm_descent::norms::NormKind;
use norm_descent::optim::{run_steepest_descent, RunOptions};
use norm_descent_bench::{outlier_quadratic, start};

fn brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("linf_bruteforce");
    group.sample_size(10);
    for d in [8, 14, 18, 22] {
        let p = outlier_quadratic(d, 1);
        group.bench_with_input(BenchmarkId::from_parameter(d), p.hessian(), |b, h| {
            b.iter(|| linf_bruteforce(black_box(h)).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigh");
    for d in [8, 32, 64] {
        let p = outlier_quadratic(d, 2);
        group.bench_with_input(BenchmarkId::from_parameter(d), p.hessian(), |b, h| {
            b.iter(|| eigh(black_box(h)).unwrap())
        });
    }
    group.finish();
}

fn report(c: &mut Criterion) {
    let p = outlier_quadratic(12, 3);
    c.bench_function("smoothness_report_d12", |b| {
        b.iter(|| SmoothnessReport::compute(black_box(p.hessian())).unwrap())
    });
}

fn descent(c: &mut Criterion) {
    let d = 16;
    let p = outlier_quadratic(d, 4);
    let x0 = start(d);
    let mut group = c.benchmark_group("steepest_descent_1000");
    for kind in [NormKind::Euclidean, NormKind::Max, NormKind::One] {
        let l = norm_descent::analysis::smoothness_constant(p.hessian(), &kind).unwrap();
        group.bench_function(kind.label(), |b| {
            b.iter(|| run_steepest_descent(&mut &p, &kind, l, &x0, RunOptions::new(1000)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, brute_force, eigen, report, descent);
criterion_main!(benches);
