//! Synthetic scenes with ground truth, plus the independent oracles and
//! metrics used to evaluate the tracker.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; proposal noise, depth samples and random layouts use
//! separate streams of the same seed. Gaussian draws use `rand_distr`'s
//! `StandardNormal`. Every object consumes the same number of draws each frame
//! whether or not it is emitted, so changing occlusions or dropout does not
//! shift the noise of other objects.

mod eval;
mod oracle;
mod scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{gravity_align, project, transform_to_global, Cuboid, Extents, Intrinsics, Vec3};
use crate::heatmap::DEFAULT_VOXEL_SIZE;
use crate::io::{DepthSample, FrameObservation, SceneFile, SceneHeader};

pub use eval::{evaluate, Metrics};
pub use oracle::{voxel_axis_measures, voxel_counts, voxel_iou_oracle, AxisMeasure, VoxelCounts};
pub use scenario::{NoiseModel, ObjectSpec, OcclusionWindow, Scenario, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidScenario { field: String, message: String },
    #[error("voxel pitch {pitch} is too coarse; it must not exceed {limit} (a tenth of the smallest extent)")]
    PitchTooCoarse { pitch: f64, limit: f64 },
    #[error("oracle requires axis-aligned boxes")]
    NotAxisAligned,
    #[error("frame count mismatch: tracks have {tracks}, truth has {truth}")]
    FrameCountMismatch { tracks: usize, truth: usize },
    #[error("frame {frame}: {tracks} matches but {truth} true ids")]
    ProposalCountMismatch { frame: u64, tracks: usize, truth: usize },
}

/// True object id of each emitted proposal, per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub frame_index: u64,
    pub ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLabels {
    pub seed: u64,
    /// All object ids in the scenario.
    pub objects: Vec<u64>,
    pub occlusions: Vec<OcclusionWindow>,
    pub frames: Vec<FrameTruth>,
}

/// Renders a scenario into camera-frame proposals and matching ground truth.
pub fn generate(scenario: &Scenario) -> Result<(SceneFile, GroundTruthLabels), SynthError> {
    scenario.validate()?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    noise_rng.set_stream(scenario::PROPOSAL_STREAM);
    let mut depth_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    depth_rng.set_stream(scenario::DEPTH_STREAM);

    let intrinsics = Intrinsics::default();
    let world: Vec<(u64, Cuboid)> = scenario.objects.iter().map(|o| (o.id, gravity_align(&o.bbox))).collect();
    let noise = scenario.noise;

    let mut frames = Vec::with_capacity(scenario.frames as usize);
    let mut truth_frames = Vec::with_capacity(scenario.frames as usize);
    for (i, pose) in scenario.trajectory.poses(scenario.frames).into_iter().enumerate() {
        let frame_index = i as u64;
        let to_camera = pose.inverse();
        let mut proposals = Vec::new();
        let mut ids = Vec::new();
        let mut depth_samples = Vec::new();
        for &(id, bbox) in &world {
            let drop_draw: f64 = noise_rng.random();
            let jitter: [f64; 6] = std::array::from_fn(|_| noise_rng.sample(StandardNormal));
            let occluded = scenario.occlusions.iter().any(|w| w.object == id && w.covers(frame_index));
            if occluded || drop_draw < noise.dropout {
                continue;
            }
            let cam = transform_to_global(&bbox, &to_camera);
            proposals.push(jittered(&cam, &jitter, noise));
            ids.push(id);
            for _ in 0..scenario.depth_samples_per_object {
                let t: [f64; 3] = std::array::from_fn(|_| depth_rng.random());
                let (lo, e) = (bbox.anchor(), bbox.extents());
                let p = to_camera.apply(Vec3::new(lo.x + t[0] * e.l, lo.y + t[1] * e.w, lo.z + t[2] * e.h));
                if p.z > 0.05 {
                    if let Some((u, v)) = project(p, &intrinsics) {
                        depth_samples.push(DepthSample { u, v, z: p.z });
                    }
                }
            }
        }
        frames.push(FrameObservation { frame_index, pose, proposals, depth_samples });
        truth_frames.push(FrameTruth { frame_index, ids });
    }

    let scene = SceneFile {
        header: SceneHeader { intrinsics, voxel_size: DEFAULT_VOXEL_SIZE, seed: Some(scenario.seed) },
        frames,
    };
    let truth = GroundTruthLabels {
        seed: scenario.seed,
        objects: world.iter().map(|(id, _)| *id).collect(),
        occlusions: scenario.occlusions.clone(),
        frames: truth_frames,
    };
    Ok((scene, truth))
}

/// Applies anchor and extent jitter; extents are floored at a quarter of
/// their noise-free value so they stay positive.
fn jittered(c: &Cuboid, draws: &[f64; 6], noise: NoiseModel) -> Cuboid {
    if noise.anchor_sigma == 0.0 && noise.extent_sigma == 0.0 {
        return *c;
    }
    let a = c.anchor();
    let e = c.extents();
    let sa = noise.anchor_sigma;
    let se = noise.extent_sigma;
    let ext = |v: f64, d: f64| (v + se * d).max(v / 4.0);
    Cuboid::aligned(
        Vec3::new(a.x + sa * draws[0], a.y + sa * draws[1], a.z + sa * draws[2]),
        Extents::new(ext(e.l, draws[3]), ext(e.w, draws[4]), ext(e.h, draws[5])),
    )
    .expect("jittered extents stay positive")
}
