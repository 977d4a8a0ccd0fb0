use criterion::{black_box, criterion_group, criterion_main, Criterion};

use haar_postorder::dwt::{analyze_levelwise, analyze_streaming, Signal};
use haar_postorder::dyadic::{carleson, Depth, DyadicInterval, IntervalSet};
use haar_postorder::geometry::maximal_decomposition;
use haar_postorder::order::Rearrangement;

fn bench_carleson(c: &mut Criterion) {
    let depth = Depth::new(12).unwrap();
    let full = IntervalSet::full(depth).unwrap();
    c.bench_function("carleson full tree N=12", |b| {
        b.iter(|| carleson(black_box(&full)))
    });
}

fn bench_rearrangement_table(c: &mut Criterion) {
    let depth = Depth::new(12).unwrap();
    c.bench_function("postorder table N=12", |b| {
        b.iter(|| Rearrangement::postorder(black_box(depth)).unwrap())
    });
}

fn bench_streaming_dwt(c: &mut Criterion) {
    let samples: Vec<f64> = (0..1u64 << 16).map(|i| (i as f64).sin()).collect();
    let signal = Signal::new(samples).unwrap();
    c.bench_function("streaming dwt M=16 double", |b| {
        b.iter(|| analyze_streaming(black_box(&signal)))
    });
    c.bench_function("levelwise dwt M=16 double", |b| {
        b.iter(|| analyze_levelwise(black_box(&signal)))
    });
}

fn bench_decomposition(c: &mut Criterion) {
    let depth = Depth::new(10).unwrap();
    let j1 = DyadicInterval::new(10, 37, depth).unwrap();
    let j2 = DyadicInterval::new(2, 3, depth).unwrap();
    c.bench_function("maximal decomposition N=10", |b| {
        b.iter(|| maximal_decomposition(black_box(j1), black_box(j2), depth).unwrap())
    });
}

criterion_group!(
    benches,
    bench_carleson,
    bench_rearrangement_table,
    bench_streaming_dwt,
    bench_decomposition
);
criterion_main!(benches);
