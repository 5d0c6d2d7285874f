use std::collections::{HashMap, HashSet};
use std::f64::consts::FRAC_PI_2;

use cuboid_track::tracker::assign_labels;
use cuboid_track::{
    AssignmentMode, Cuboid, Extents, FrameObservation, Label, Mat3, Pose, Registry, Tracker, TrackerConfig, Vec3,
};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Objects on a 1 m grid with extents under 0.6 m, so distinct objects never
/// overlap.
fn world() -> impl Strategy<Value = Vec<Cuboid>> {
    prop::collection::btree_set((0..6i32, 0..6i32, 0..3i32), 1..12).prop_flat_map(|cells| {
        let n = cells.len();
        (Just(cells), prop::collection::vec(prop::array::uniform3(0.1..0.6f64), n)).prop_map(|(cells, ext)| {
            cells
                .into_iter()
                .zip(ext)
                .map(|((i, j, k), e)| {
                    Cuboid::aligned(Vec3::new(i as f64, j as f64, k as f64), Extents::new(e[0], e[1], e[2])).unwrap()
                })
                .collect()
        })
    })
}

/// Per frame, which objects are visible.
fn visibility(n: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), n), 1..25)
}

fn quarter_rotation(k: (i32, i32)) -> Mat3 {
    let snap = |m: Mat3| Mat3(m.0.map(|row| row.map(f64::round)));
    snap(Mat3::rot_z(k.0 as f64 * FRAC_PI_2).mul_mat(&Mat3::rot_x(k.1 as f64 * FRAC_PI_2)))
}

/// Camera-frame frames for a camera at `poses[f]` seeing the visible objects.
fn render(objects: &[Cuboid], vis: &[Vec<bool>], poses: &[Pose]) -> (Vec<FrameObservation>, Vec<Vec<usize>>) {
    let mut frames = Vec::new();
    let mut ids = Vec::new();
    for (f, (row, pose)) in vis.iter().zip(poses).enumerate() {
        let inv = pose.inverse();
        let visible: Vec<usize> = (0..objects.len()).filter(|&i| row[i]).collect();
        let proposals =
            visible.iter().map(|&i| cuboid_track::geometry::transform_to_global(&objects[i], &inv)).collect();
        frames.push(FrameObservation::new(f as u64, *pose, proposals));
        ids.push(visible);
    }
    (frames, ids)
}

fn run(frames: &[FrameObservation], cfg: TrackerConfig) -> (Vec<Vec<Label>>, Registry) {
    let mut t = Tracker::new(cfg);
    let labels = frames.iter().map(|f| t.step(f).unwrap().iter().map(|m| m.assigned_label).collect()).collect();
    (labels, t.into_registry())
}

fn poses_strategy(n: usize) -> impl Strategy<Value = Vec<Pose>> {
    prop::collection::vec((0..4i32, 0..4i32, prop::array::uniform3(-3.0..3.0f64)), n).prop_map(|v| {
        v.into_iter().map(|(a, b, t)| Pose::new(quarter_rotation((a, b)), Vec3::from_array(t)).unwrap()).collect()
    })
}

fn scenario() -> impl Strategy<Value = (Vec<Cuboid>, Vec<Vec<bool>>, Vec<Pose>)> {
    world().prop_flat_map(|w| {
        let n = w.len();
        (Just(w), visibility(n)).prop_flat_map(|(w, vis)| {
            let f = vis.len();
            (Just(w), Just(vis), poses_strategy(f))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn each_object_keeps_one_label((objects, vis, poses) in scenario()) {
        let (frames, ids) = render(&objects, &vis, &poses);
        let (labels, registry) = run(&frames, TrackerConfig::default());
        let mut by_object: HashMap<usize, HashSet<Label>> = HashMap::new();
        for (ls, os) in labels.iter().zip(&ids) {
            for (l, o) in ls.iter().zip(os) {
                by_object.entry(*o).or_default().insert(*l);
            }
        }
        prop_assert!(by_object.values().all(|s| s.len() == 1));
        prop_assert_eq!(registry.len(), by_object.len());
        // Labels are 1..=n in order of first appearance.
        let expected: Vec<Label> = (1..=registry.len() as u64).map(Label).collect();
        let actual: Vec<Label> = registry.tracks().iter().map(|t| t.label()).collect();
        prop_assert_eq!(actual, expected);
    }

    #[test]
    fn world_rebasing_preserves_labels((objects, vis, poses) in scenario(), k in (0..4i32, 0..4i32), shift in prop::array::uniform3(-50.0..50.0f64)) {
        let (frames, _) = render(&objects, &vis, &poses);
        let g = Pose::new(quarter_rotation(k), Vec3::from_array(shift)).unwrap();
        let rebased: Vec<FrameObservation> = frames
            .iter()
            .map(|f| FrameObservation::new(f.frame_index, g.compose(&f.pose), f.proposals.clone()))
            .collect();
        prop_assert_eq!(run(&frames, TrackerConfig::default()).0, run(&rebased, TrackerConfig::default()).0);
    }

    #[test]
    fn assignment_is_one_to_one_and_flags_agree(
        existing in prop::collection::vec((prop::array::uniform3(0.0..3.0f64), prop::array::uniform3(0.2..1.5f64)), 0..15),
        proposals in prop::collection::vec((prop::array::uniform3(0.0..3.0f64), prop::array::uniform3(0.2..1.5f64)), 0..15),
        tau in 0.05..1.0f64,
        argmax in any::<bool>(),
    ) {
        let mk = |(a, e): &([f64; 3], [f64; 3])| Cuboid::aligned(Vec3::from_array(*a), Extents::new(e[0], e[1], e[2])).unwrap();
        let mut registry = Registry::new();
        for b in &existing {
            registry.register_new(mk(b), 0);
        }
        let before = registry.clone();
        let mode = if argmax { AssignmentMode::Argmax } else { AssignmentMode::Greedy };
        let cfg = TrackerConfig::new(tau).unwrap().with_assignment(mode);
        let boxes: Vec<Cuboid> = proposals.iter().map(mk).collect();
        let results = assign_labels(&boxes, 1, &mut registry, &cfg).unwrap();
        prop_assert_eq!(results.len(), boxes.len());
        let mut seen = HashSet::new();
        let mut next_new = before.next_label().0;
        for (i, m) in results.iter().enumerate() {
            prop_assert_eq!(m.proposal_index, i);
            // Independent argmax may let two proposals claim one track.
            prop_assert!(seen.insert(m.assigned_label) || argmax, "label reused within a frame");
            prop_assert_eq!(m.is_new, m.best_iou < tau);
            if m.is_new {
                prop_assert_eq!(m.assigned_label.0, next_new);
                next_new += 1;
            } else {
                prop_assert!(before.get(m.assigned_label).is_some());
            }
        }
        prop_assert_eq!(registry.next_label().0, next_new);
        // Untouched tracks are unchanged.
        for t in before.tracks() {
            if !seen.contains(&t.label()) {
                prop_assert_eq!(registry.get(t.label()), Some(t));
            }
        }
    }
}

#[test]
fn tracking_is_deterministic() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..20 {
        let (objects, vis, poses) = scenario().new_tree(&mut runner).unwrap().current();
        let (frames, _) = render(&objects, &vis, &poses);
        assert_eq!(run(&frames, TrackerConfig::default()), run(&frames, TrackerConfig::default()));
    }
}
