use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use hrfna::kernels::{dot_product, matmul, rk4_integrate};
use hrfna::oracle;
use hrfna::workload::{OdeProblem, RhsKind};
use hrfna::{BigInt, Distribution, Dyadic, HybridNumber, HybridOps, Matrix, Tape};
use hrfna_bench::{dyadic_inputs, hybrid_inputs, setup};

fn bench_primitives(c: &mut Criterion) {
    let (ms, policy) = setup();
    let ops = HybridOps::new(&ms, &policy);
    let value = Dyadic::new(BigInt::from(0x5a5a_5a5a_5a5au64), -31);
    let x = HybridNumber::from_real(&value, &ms, 24);
    let wide = HybridNumber::from_dyadic_exact(
        &Dyadic::new(BigInt::from(1234567890123456789i64) * BigInt::from(987654321u64), -80),
        &ms,
    )
    .unwrap();

    let mut group = c.benchmark_group("primitives");
    group.bench_function("encode", |b| {
        let n = BigInt::from(1234567890123456789i64);
        b.iter(|| ms.encode(black_box(&n)).unwrap())
    });
    group.bench_function("crt_reconstruct", |b| {
        b.iter(|| ms.reconstruct(black_box(wide.residues())).unwrap())
    });
    group.bench_function("hybrid_mul", |b| {
        let mut tape = Tape::new();
        b.iter(|| ops.mul(black_box(&x), black_box(&x), &mut tape).unwrap())
    });
    group.bench_function("mac", |b| {
        let mut tape = Tape::new();
        let mut acc = HybridNumber::zero(&ms);
        b.iter(|| {
            acc = ops.mac(black_box(&acc), black_box(&x), black_box(&x), &mut tape).unwrap();
        })
    });
    group.bench_function("magnitude_interval", |b| {
        b.iter(|| hrfna::magnitude_interval(&ms, black_box(&wide)).unwrap())
    });
    group.bench_function("normalize_wide", |b| {
        let mut tape = Tape::new();
        b.iter(|| ops.normalize(black_box(&wide), &mut tape))
    });
    group.finish();
}

fn bench_dot(c: &mut Criterion) {
    let (ms, policy) = setup();
    let ops = HybridOps::new(&ms, &policy);
    let mut group = c.benchmark_group("dot_product");
    for len in [1024usize, 4096] {
        group.throughput(Throughput::Elements(len as u64));
        let dist = Distribution::moderate();
        let (hx, hy) = hybrid_inputs(&ms, &dist, len);
        group.bench_with_input(BenchmarkId::new("hybrid", len), &len, |b, _| {
            b.iter(|| dot_product(&ops, black_box(&hx), black_box(&hy)).unwrap())
        });
        let (xs, ys) = dyadic_inputs(&dist, len);
        let (fx, fy) = (oracle::to_f64_vec(&xs), oracle::to_f64_vec(&ys));
        group.bench_with_input(BenchmarkId::new("binary64", len), &len, |b, _| {
            b.iter(|| oracle::binary64_dot(black_box(&fx), black_box(&fy)))
        });
        let cfg = hrfna::BfpConfig::default();
        group.bench_with_input(BenchmarkId::new("bfp", len), &len, |b, _| {
            b.iter(|| oracle::bfp_dot(black_box(&xs), black_box(&ys), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("exact", len), &len, |b, _| {
            b.iter(|| oracle::exact_dot(black_box(&xs), black_box(&ys)).unwrap())
        });
    }
    group.finish();
}

fn bench_matmul(c: &mut Criterion) {
    let (ms, policy) = setup();
    let ops = HybridOps::new(&ms, &policy);
    let dist = Distribution::moderate();
    let size = 24usize;
    let (flat_a, flat_b) = hybrid_inputs(&ms, &dist, size * size);
    let a = Matrix::from_vec(size, size, flat_a);
    let b = Matrix::from_vec(size, size, flat_b);
    let mut group = c.benchmark_group("matmul_24");
    group.bench_function("sequential", |bch| {
        bch.iter(|| matmul(&ops, black_box(&a), black_box(&b), 1).unwrap())
    });
    group.bench_function("four_workers", |bch| {
        bch.iter(|| matmul(&ops, black_box(&a), black_box(&b), 4).unwrap())
    });
    group.finish();
}

fn bench_rk4(c: &mut Criterion) {
    let (ms, policy) = setup();
    let ops = HybridOps::new(&ms, &policy);
    let prob = OdeProblem::new(RhsKind::Logistic, Dyadic::pow2(-1), Dyadic::pow2(-7), 64)
        .unwrap()
        .with_checkpoint_every(64);
    let mut group = c.benchmark_group("rk4_64_steps");
    group.bench_function("hybrid", |b| {
        b.iter(|| rk4_integrate(&ops, black_box(&prob)).unwrap())
    });
    group.bench_function("highprec_256", |b| {
        b.iter(|| oracle::highprec_rk4(black_box(&prob), 256))
    });
    group.finish();
}

criterion_group!(benches, bench_primitives, bench_dot, bench_matmul, bench_rk4);
criterion_main!(benches);
