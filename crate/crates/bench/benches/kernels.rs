use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qkt_bench::{banded, pair, projection, unitary};
use qkt_core::elementary::witness;
use qkt_core::mv::BoundaryConfig;
use qkt_core::quasi::kappa0;
use qkt_core::{boundary_odd, factor_p1p2};
use std::hint::black_box;

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("norm");
    for n in [16, 64, 256] {
        let a = banded(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| black_box(a.norm())));
    }
    g.finish();
}

fn products(c: &mut Criterion) {
    let a = banded(128, 2);
    let b = banded(128, 2).adjoint();
    c.bench_function("mul/cycle128", |bench| bench.iter(|| black_box(a.mul(&b))));
    c.bench_function("witness/cycle128", |bench| bench.iter(|| black_box(witness(&a))));
}

fn kappa(c: &mut Criterion) {
    let mut g = c.benchmark_group("kappa0");
    for eps in [0.02, 0.24] {
        let p = projection(64, eps);
        g.bench_with_input(BenchmarkId::from_parameter(eps), &p, |b, p| b.iter(|| black_box(kappa0(p).unwrap())));
    }
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let p = pair(32);
    let inst = unitary(&p, 8);
    let preds = p.side_predicates(p.r());
    c.bench_function("factor_p1p2/cycle32", |b| {
        b.iter(|| black_box(factor_p1p2(&inst.u, &inst.path, p.splitting(), &preds).unwrap()))
    });
}

fn boundary(c: &mut Criterion) {
    let p = pair(64);
    let inst = unitary(&p, 4);
    let cfg = BoundaryConfig::default();
    let mut g = c.benchmark_group("boundary");
    g.sample_size(10);
    g.bench_function("cycle64", |b| b.iter(|| black_box(boundary_odd(&inst.u, &inst.path, &p, &cfg).unwrap())));
    g.finish();
}

criterion_group!(benches, norms, products, kappa, factorization, boundary);
criterion_main!(benches);
