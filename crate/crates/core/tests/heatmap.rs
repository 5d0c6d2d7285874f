use cuboid_track::{HeatmapGrid, Vec3};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<(Vec3, f64)>> {
    prop::collection::vec((prop::array::uniform3(-1.0..1.0f64), 0.1..5.0f64), 0..300)
        .prop_map(|v| v.into_iter().map(|(p, h)| (Vec3::from_array(p), h)).collect())
}

fn voxel() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.02), Just(0.05), 0.01..0.3f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn heat_is_conserved(pts in points(), v in voxel()) {
        let mut g = HeatmapGrid::new(v).unwrap();
        g.update(&pts).unwrap();
        let expected: f64 = pts.iter().map(|(_, h)| h).sum();
        prop_assert!((g.total_heat() - expected).abs() <= 1e-9 * expected.max(1.0));
        let samples: u64 = g.iter().map(|(_, c)| c.sample_count()).sum();
        prop_assert_eq!(samples, pts.len() as u64);
    }

    #[test]
    fn means_stay_in_their_voxel(pts in points(), v in voxel()) {
        let mut g = HeatmapGrid::new(v).unwrap();
        for chunk in pts.chunks(7) {
            g.update(chunk).unwrap();
        }
        for (key, cell) in g.iter() {
            prop_assert_eq!(g.key_of(cell.mean_position()), *key);
        }
    }

    #[test]
    fn insertion_order_does_not_matter(pts in points(), v in voxel(), seed in any::<u64>()) {
        let mut shuffled = pts.clone();
        // Deterministic Fisher-Yates driven by a simple LCG.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut a = HeatmapGrid::new(v).unwrap();
        a.update(&pts).unwrap();
        let mut b = HeatmapGrid::new(v).unwrap();
        b.update(&shuffled).unwrap();
        let (ca, cb) = (a.sorted_cells(), b.sorted_cells());
        prop_assert_eq!(ca.len(), cb.len());
        for ((ka, x), (kb, y)) in ca.iter().zip(&cb) {
            prop_assert_eq!(ka, kb);
            prop_assert_eq!(x.sample_count(), y.sample_count());
            prop_assert!((x.heat() - y.heat()).abs() <= 1e-9 * x.heat());
            prop_assert!((x.mean_position() - y.mean_position()).norm() <= 1e-9);
        }
    }

    #[test]
    fn failed_update_leaves_grid_unchanged(pts in points(), bad_at in 0usize..300, which in 0..3u8) {
        let mut g = HeatmapGrid::new(0.05).unwrap();
        g.update(&pts).unwrap();
        let before = g.clone();
        let mut more = pts.clone();
        let bad = match which {
            0 => (Vec3::new(f64::NAN, 0.0, 0.0), 1.0),
            1 => (Vec3::ZERO, -1.0),
            _ => (Vec3::new(0.0, f64::INFINITY, 0.0), 1.0),
        };
        more.insert(bad_at.min(more.len()), bad);
        prop_assert!(g.update(&more).is_err());
        prop_assert_eq!(g, before);
    }

    #[test]
    fn boundaries_are_disjoint_and_cover_their_cells(
        blobs in prop::collection::vec((prop::array::uniform3(-1.0..1.0f64), 0.02..0.2f64), 1..6),
        min_cells in 1usize..10,
    ) {
        let mut g = HeatmapGrid::new(0.02).unwrap();
        for (c, r) in &blobs {
            let n = 6;
            let mut pts = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let t = |q: usize| (q as f64 / (n - 1) as f64 - 0.5) * 2.0 * r;
                        pts.push((Vec3::new(c[0] + t(i), c[1] + t(j), c[2] + t(k)), 1.0));
                    }
                }
            }
            g.update(&pts).unwrap();
        }
        let boxes = g.extract_boundaries(1.0, min_cells);
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                prop_assert_eq!(cuboid_track::geometry::cuboid_intersection_volume(a, b).unwrap(), 0.0);
            }
        }
        let mut sorted = boxes.clone();
        sorted.sort_by(|a, b| a.anchor().to_array().partial_cmp(&b.anchor().to_array()).unwrap());
        prop_assert_eq!(sorted, boxes);
    }
}
