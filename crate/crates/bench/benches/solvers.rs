use std::hint::black_box;

use bigan_core::cpwl::{build_transport_pair, realize_as_network, DEFAULT_LAMBDA};
use bigan_core::ipm::dudley_distance;
use bigan_core::{DiscreteMeasure, LipschitzSpec, ReluNetwork};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

fn dudley(c: &mut Criterion) {
    let mut group = c.benchmark_group("dudley_transport");
    group.sample_size(10);
    let spec = LipschitzSpec::bounded(2.0).unwrap();
    for n in [64, 256, 1024] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mu = DiscreteMeasure::uniform(cloud(&mut rng, n, 3)).unwrap();
        let nu = DiscreteMeasure::uniform(cloud(&mut rng, n, 3)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| dudley_distance(black_box(&mu), black_box(&nu), &spec).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = ReluNetwork::glorot_uniform(&[3, 64, 64, 64, 1], &mut rng).unwrap();
    let x = [0.3, -0.2, 1.1];
    c.bench_function("forward_64x3", |b| {
        b.iter(|| net.forward(black_box(&x)).unwrap())
    });
    c.bench_function("backward_64x3", |b| {
        b.iter(|| net.backward(black_box(&x), &[1.0]).unwrap())
    });
}

fn cpwl(c: &mut Criterion) {
    let mut group = c.benchmark_group("cpwl_realize");
    for n in [64, 512] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let z = cloud(&mut rng, n, 1);
        let x = cloud(&mut rng, n, 4);
        let pair = build_transport_pair(&z, &x, DEFAULT_LAMBDA).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| realize_as_network(black_box(&pair.generator)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dudley, network, cpwl);
criterion_main!(benches);
