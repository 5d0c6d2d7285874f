use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::{GroundTruthLabels, SynthError};
use crate::io::TrackFile;

/// Tracking quality against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Fraction of observed objects that carried exactly one label throughout.
    pub consistency: f64,
    /// Observations whose label differs from their object's modal label.
    pub switches: u64,
    /// Fraction of evaluable occlusion windows where the label before and
    /// after the window agree.
    pub reid: f64,
    pub count_err: u64,
    pub observed_objects: usize,
    pub reid_windows: usize,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "consistency={:.3} switches={} reid={:.3} count_err={}",
            self.consistency, self.switches, self.reid, self.count_err
        )
    }
}

/// Scores a tracker run. Frames are paired by position; each frame's matches
/// must line up one-to-one with the true ids of its proposals.
pub fn evaluate(tracks: &TrackFile, truth: &GroundTruthLabels) -> Result<Metrics, SynthError> {
    if tracks.frames.len() != truth.frames.len() {
        return Err(SynthError::FrameCountMismatch { tracks: tracks.frames.len(), truth: truth.frames.len() });
    }
    // object id -> (frame index, label) in frame order
    let mut seen: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for (tf, gf) in tracks.frames.iter().zip(&truth.frames) {
        if tf.matches.len() != gf.ids.len() {
            return Err(SynthError::ProposalCountMismatch {
                frame: gf.frame_index,
                tracks: tf.matches.len(),
                truth: gf.ids.len(),
            });
        }
        for (m, &id) in tf.matches.iter().zip(&gf.ids) {
            seen.entry(id).or_default().push((gf.frame_index, m.assigned_label.0));
        }
    }

    let mut consistent = 0usize;
    let mut switches = 0u64;
    for obs in seen.values() {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for &(_, label) in obs {
            *counts.entry(label).or_default() += 1;
        }
        if counts.len() == 1 {
            consistent += 1;
        }
        let (modal, n) =
            counts.iter().fold(
                (u64::MAX, 0),
                |(bl, bn), (&l, &n)| {
                    if n > bn || (n == bn && l < bl) {
                        (l, n)
                    } else {
                        (bl, bn)
                    }
                },
            );
        debug_assert!(modal != u64::MAX);
        switches += obs.len() as u64 - n;
    }
    let consistency = if seen.is_empty() { 1.0 } else { consistent as f64 / seen.len() as f64 };

    let (mut windows, mut kept) = (0usize, 0usize);
    for w in &truth.occlusions {
        let Some(obs) = seen.get(&w.object) else { continue };
        let before = obs.iter().rev().find(|(f, _)| *f < w.start);
        let after = obs.iter().find(|(f, _)| *f > w.end);
        if let (Some(b), Some(a)) = (before, after) {
            windows += 1;
            kept += usize::from(a.1 == b.1);
        }
    }
    let reid = if windows == 0 { 1.0 } else { kept as f64 / windows as f64 };

    Ok(Metrics {
        consistency,
        switches,
        reid,
        count_err: tracks.registry.len().abs_diff(truth.objects.len()) as u64,
        observed_objects: seen.len(),
        reid_windows: windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cuboid, Extents, Vec3};
    use crate::io::FrameMatches;
    use crate::synth::{FrameTruth, OcclusionWindow};
    use crate::tracker::{Label, MatchResult, Registry, TrackerConfig};

    fn run(labels: &[Vec<u64>], n_tracks: usize) -> TrackFile {
        let mut registry = Registry::new();
        for i in 0..n_tracks {
            registry.register_new(
                Cuboid::aligned(Vec3::new(i as f64 * 2.0, 0.0, 0.0), Extents::new(1.0, 1.0, 1.0)).unwrap(),
                0,
            );
        }
        let frames = labels
            .iter()
            .enumerate()
            .map(|(f, ls)| FrameMatches {
                frame_index: f as u64,
                matches: ls
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| MatchResult {
                        proposal_index: i,
                        assigned_label: Label(l),
                        best_iou: 1.0,
                        is_new: false,
                    })
                    .collect(),
            })
            .collect();
        TrackFile { config: TrackerConfig::default(), frames, registry }
    }

    fn truth(ids: &[Vec<u64>], objects: Vec<u64>, occlusions: Vec<OcclusionWindow>) -> GroundTruthLabels {
        GroundTruthLabels {
            seed: 0,
            objects,
            occlusions,
            frames: ids
                .iter()
                .enumerate()
                .map(|(f, ids)| FrameTruth { frame_index: f as u64, ids: ids.clone() })
                .collect(),
        }
    }

    #[test]
    fn perfect_run() {
        let ids = vec![vec![1, 2]; 10];
        let m = evaluate(&run(&vec![vec![1, 2]; 10], 2), &truth(&ids, vec![1, 2], vec![])).unwrap();
        assert_eq!(m.to_string(), "consistency=1.000 switches=0 reid=1.000 count_err=0");
    }

    #[test]
    fn fresh_label_every_frame() {
        let ids = vec![vec![1, 2]; 10];
        let labels: Vec<Vec<u64>> = (0..10).map(|f| vec![2 * f + 1, 2 * f + 2]).collect();
        let m = evaluate(&run(&labels, 20), &truth(&ids, vec![1, 2], vec![])).unwrap();
        assert_eq!(m.consistency, 0.0);
        assert_eq!(m.count_err, 18);
        assert_eq!(m.switches, 18);
    }

    #[test]
    fn single_relabel_is_one_switch() {
        let ids = vec![vec![1, 2]; 10];
        let mut labels = vec![vec![1, 2]; 10];
        labels[4] = vec![1, 3];
        let m = evaluate(&run(&labels, 3), &truth(&ids, vec![1, 2], vec![])).unwrap();
        assert_eq!(m.switches, 1);
        assert_eq!(m.consistency, 0.5);
        assert_eq!(m.count_err, 1);
    }

    #[test]
    fn reid_across_window() {
        let ids: Vec<Vec<u64>> = (0..10).map(|f| if (3..=5).contains(&f) { vec![1] } else { vec![1, 2] }).collect();
        let window = vec![OcclusionWindow { object: 2, start: 3, end: 5 }];
        let kept = ids.clone();
        assert_eq!(evaluate(&run(&kept, 2), &truth(&ids, vec![1, 2], window.clone())).unwrap().reid, 1.0);
        let lost: Vec<Vec<u64>> = (0..10u64)
            .map(|f| {
                if f < 3 {
                    vec![1, 2]
                } else if f <= 5 {
                    vec![1]
                } else {
                    vec![1, 3]
                }
            })
            .collect();
        let m = evaluate(&run(&lost, 3), &truth(&ids, vec![1, 2], window)).unwrap();
        assert_eq!((m.reid, m.reid_windows), (0.0, 1));
    }

    #[test]
    fn window_at_sequence_edge_is_skipped() {
        let ids: Vec<Vec<u64>> = (0..5).map(|f| if f <= 1 { vec![1] } else { vec![1, 2] }).collect();
        let window = vec![OcclusionWindow { object: 2, start: 0, end: 1 }];
        let m = evaluate(&run(&ids, 2), &truth(&ids, vec![1, 2], window)).unwrap();
        assert_eq!((m.reid, m.reid_windows), (1.0, 0));
    }

    #[test]
    fn mismatches_are_errors() {
        let ids = vec![vec![1, 2]; 3];
        assert!(matches!(
            evaluate(&run(&vec![vec![1, 2]; 2], 2), &truth(&ids, vec![1, 2], vec![])),
            Err(SynthError::FrameCountMismatch { tracks: 2, truth: 3 })
        ));
        assert!(matches!(
            evaluate(&run(&vec![vec![1]; 3], 2), &truth(&ids, vec![1, 2], vec![])),
            Err(SynthError::ProposalCountMismatch { frame: 0, .. })
        ));
    }
}
