//! Deterministic workloads shared by the benchmarks.

use cuboid_track::{Cuboid, Extents, FrameObservation, Pose, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box(rng: &mut impl Rng, spread: f64) -> Cuboid {
    let a =
        Vec3::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(0.0..spread));
    let e = Extents::new(rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
    Cuboid::aligned(a, e).expect("positive extents")
}

/// `n` axis-aligned boxes scattered over a cube of side `2 * spread`.
pub fn boxes(n: usize, spread: f64, seed: u64) -> Vec<Cuboid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_box(&mut rng, spread)).collect()
}

/// A static scene of `objects` boxes observed for `frames` frames with an
/// identity pose; each frame shows `per_frame` of them with small jitter.
pub fn frames(objects: usize, per_frame: usize, frames: usize, seed: u64) -> Vec<FrameObservation> {
    let world = boxes(objects, 20.0, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    (0..frames)
        .map(|f| {
            let start = rng.random_range(0..objects);
            let proposals = (0..per_frame)
                .map(|k| {
                    let b = world[(start + k) % objects];
                    let j = Vec3::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01), 0.0);
                    Cuboid::aligned(b.anchor() + j, b.extents()).expect("positive extents")
                })
                .collect();
            FrameObservation::new(f as u64, Pose::IDENTITY, proposals)
        })
        .collect()
}

/// `n` points with unit heat spread over a cube of side `side` meters.
pub fn points(n: usize, side: f64, seed: u64) -> Vec<(Vec3, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (Vec3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), rng.random_range(0.0..side)), 1.0)
        })
        .collect()
}
