use cuboid_track::geometry::{cuboid_intersection_volume, interval_intersection, interval_union, iou3d_with};
use cuboid_track::synth::{evaluate, generate, voxel_axis_measures, voxel_counts, Metrics, NoiseModel, Scenario};
use cuboid_track::tracker::track_scene;
use cuboid_track::{Cuboid, Extents, TrackerConfig, UnionMode, Vec3};
use proptest::prelude::*;

fn run(s: &Scenario) -> Metrics {
    let (scene, truth) = generate(s).unwrap();
    let tracks = track_scene(&scene.frames, TrackerConfig::default()).unwrap();
    evaluate(&tracks, &truth).unwrap()
}

/// Overlapping boxes with extents in [0.5, 2) m.
fn overlapping_pair() -> impl Strategy<Value = (Cuboid, Cuboid)> {
    (
        prop::array::uniform3(0.5..2.0f64),
        prop::array::uniform3(0.5..2.0f64),
        prop::array::uniform3(0.05..0.95f64),
        prop::array::uniform3(-1.0..1.0f64),
    )
        .prop_map(|(ea, eb, frac, base)| {
            let a = Cuboid::aligned(Vec3::from_array(base), Extents::new(ea[0], ea[1], ea[2])).unwrap();
            // Shift b so each axis overlaps a by a fraction of the shorter side.
            let anchor: [f64; 3] = std::array::from_fn(|i| base[i] + ea[i] - frac[i] * ea[i].min(eb[i]));
            (a, Cuboid::aligned(Vec3::from_array(anchor), Extents::new(eb[0], eb[1], eb[2])).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn iou_agrees_with_voxel_oracle((a, b) in overlapping_pair()) {
        let pitch = 0.01;
        let counts = voxel_counts(&a, &b, pitch).unwrap();
        let ie = iou3d_with(&a, &b, UnionMode::InclusionExclusion).unwrap();
        prop_assert!((ie - counts.iou()).abs() <= 0.02, "{} vs {}", ie, counts.iou());
        let inter = cuboid_intersection_volume(&a, &b).unwrap();
        // Each axis is off by at most one voxel.
        let sides: Vec<f64> = (0..3).map(|i| interval_intersection(a.interval(i), b.interval(i))).collect();
        let bound = sides.iter().map(|s| s + pitch).product::<f64>() - sides.iter().product::<f64>();
        prop_assert!((inter - counts.intersection_volume()).abs() <= bound + 1e-12);
        for (axis, m) in voxel_axis_measures(&a, &b, pitch).unwrap().iter().enumerate() {
            let (ia, ib) = (a.interval(axis), b.interval(axis));
            prop_assert!((interval_intersection(ia, ib) - m.intersection).abs() <= pitch + 1e-12);
            prop_assert!((interval_union(ia, ib) - m.union).abs() <= pitch + 1e-12);
        }
    }
}

#[test]
fn noise_free_scene_is_tracked_perfectly() {
    for seed in 0..5 {
        let m = run(&Scenario::random(6, 120, 0, seed, NoiseModel::default()));
        assert_eq!((m.consistency, m.switches, m.count_err), (1.0, 0, 0), "seed {seed}: {m}");
    }
}

#[test]
fn objects_are_reidentified_after_occlusion() {
    for seed in 0..5 {
        let m = run(&Scenario::random(8, 300, 3, seed, NoiseModel::default()));
        assert_eq!(m.reid_windows, 3, "seed {seed}");
        assert_eq!((m.reid, m.switches, m.count_err), (1.0, 0, 0), "seed {seed}: {m}");
    }
}

#[test]
fn reid_degrades_monotonically_with_anchor_noise() {
    let means: Vec<f64> = [0.0, 0.01, 0.02, 0.04]
        .iter()
        .map(|&sigma| {
            let noise = NoiseModel { anchor_sigma: sigma, ..Default::default() };
            (0..20).map(|seed| run(&Scenario::random(8, 300, 3, seed, noise)).reid).sum::<f64>() / 20.0
        })
        .collect();
    assert_eq!(means[0], 1.0);
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "{means:?}");
    }
}

#[test]
fn generation_is_reproducible() {
    let noise = NoiseModel { anchor_sigma: 0.01, extent_sigma: 0.005, dropout: 0.05 };
    let s = Scenario::random(5, 50, 2, 42, noise);
    assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
}
