use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use sigjoin_bench::random_strings;
use sigjoin_core::SignatureBase;

/// Hashing rate of the default two-component base over string lengths
/// spanning join keys to page-sized blobs.
fn bench_signature_throughput(c: &mut Criterion) {
    let base = SignatureBase::default_base();
    let mut group = c.benchmark_group("signature");
    for len in [10usize, 50, 100, 1024, 65536] {
        let strings = random_strings(7, 256, len);
        group.throughput(Throughput::Bytes((strings.len() * len) as u64));
        group.bench_function(format!("{len}B x256"), |b| {
            b.iter(|| {
                for s in &strings {
                    black_box(base.compute_signature(black_box(s)).unwrap());
                }
            })
        });
    }
    group.finish();
}

/// The wide configurations exercise the generic kernels instead of the
/// packed fast path.
fn bench_signature_configs(c: &mut Criterion) {
    let mut group = c.benchmark_group("signature_configs");
    let strings = random_strings(8, 256, 100);
    for (f, n_sig) in [(16u8, 1usize), (16, 2), (16, 4), (8, 2)] {
        let base = SignatureBase::new(f, n_sig).unwrap();
        group.throughput(Throughput::Bytes((strings.len() * 100) as u64));
        group.bench_function(format!("f{f}_n{n_sig}_100B"), |b| {
            b.iter(|| {
                for s in &strings {
                    black_box(base.compute_signature(black_box(s)).unwrap());
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_signature_throughput, bench_signature_configs);
criterion_main!(benches);
