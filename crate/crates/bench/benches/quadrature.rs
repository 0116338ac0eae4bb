use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hyperlattice::quadrature::integrate_line;
use hyperlattice::theory::{class2_limit_cumulant, variance_exact};
use hyperlattice::{Class2Method, PerturbationSpec, TestFunction};

fn adaptive(c: &mut Criterion) {
    c.bench_function("quadrature/gaussian_line", |b| {
        b.iter(|| integrate_line(|x| (-black_box(1.3) * x * x).exp(), 1.0, 1e-12).unwrap())
    });
}

fn theory(c: &mut Criterion) {
    let f1 = TestFunction::gaussian_bump(1.0, 1).unwrap();
    let f2 = TestFunction::gaussian_bump(1.0, 2).unwrap();
    let spec2 = PerturbationSpec::gaussian(1.0, 2).unwrap();
    c.bench_function("quadrature/variance_exact_d2", |b| {
        b.iter(|| variance_exact(&f2, &spec2, black_box(50.0), None).unwrap())
    });
    c.bench_function("quadrature/class2_k4_nested", |b| {
        b.iter(|| class2_limit_cumulant(&f1, 1.0, 4, Class2Method::Nested).unwrap())
    });
}

criterion_group!(benches, adaptive, theory);
criterion_main!(benches);
