use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperlattice::cumulants::{cumulant_from_moments, for_each_partition_shape};

fn enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("partitions/enumerate");
    for m in [6usize, 8, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| {
                let mut n = 0usize;
                for_each_partition_shape(black_box(m), |blocks| n += blocks.len()).unwrap();
                n
            })
        });
    }
    group.finish();
}

fn moments_to_cumulant(c: &mut Criterion) {
    let moments: Vec<f64> = (1..=8).map(|k| k as f64).collect();
    c.bench_function("partitions/cumulant_from_moments_8", |b| {
        b.iter(|| black_box(cumulant_from_moments(black_box(&moments))))
    });
}

criterion_group!(benches, enumerate, moments_to_cumulant);
criterion_main!(benches);
