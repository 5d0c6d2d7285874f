use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cuboid_track::geometry::iou3d;
use cuboid_track::tracker::{best_match, Registry};
use cuboid_track::{Tracker, TrackerConfig, UnionMode};
use cuboid_track_bench::{boxes, frames};

fn pairwise_iou(c: &mut Criterion) {
    let b = boxes(2, 0.5, 1);
    c.bench_function("iou3d", |bench| bench.iter(|| iou3d(black_box(&b[0]), black_box(&b[1]))));
}

fn registry_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("best_match");
    for m in [100usize, 1_000, 10_000] {
        let mut registry = Registry::new();
        for b in boxes(m, 50.0, 2) {
            registry.register_new(b, 0);
        }
        let probe = boxes(1, 50.0, 3)[0];
        group.bench_with_input(BenchmarkId::from_parameter(m), &registry, |bench, r| {
            bench.iter(|| best_match(black_box(&probe), r, UnionMode::Paper))
        });
    }
    group.finish();
}

fn sequence(c: &mut Criterion) {
    let seq = frames(50, 10, 1000, 4);
    c.bench_function("track_1000_frames", |bench| {
        bench.iter(|| {
            let mut t = Tracker::new(TrackerConfig::default());
            for f in &seq {
                t.step(f).unwrap();
            }
            t.into_registry().len()
        })
    });
}

criterion_group!(benches, pairwise_iou, registry_scan, sequence);
criterion_main!(benches);
