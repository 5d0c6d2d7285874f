use std::collections::HashSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::SynthError;
use crate::geometry::{gravity_align, Cuboid, Extents, Mat3, Pose, RotationEuler, Vec3};

/// A ground-truth object in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: u64,
    pub bbox: Cuboid,
}

/// Frames `start..=end` during which an object yields no proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionWindow {
    pub object: u64,
    pub start: u64,
    pub end: u64,
}

impl OcclusionWindow {
    pub fn covers(&self, frame: u64) -> bool {
        (self.start..=self.end).contains(&frame)
    }
}

/// Proposal noise: isotropic Gaussian jitter on anchor and extents plus
/// independent dropout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub anchor_sigma: f64,
    #[serde(default)]
    pub extent_sigma: f64,
    #[serde(default)]
    pub dropout: f64,
}

/// Camera path generator.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// Camera fixed at the world origin.
    Identity,
    /// Camera circles `center` at `radius` and `height`, looking horizontally
    /// at the center. With `quarter_turns` the heading is snapped to the
    /// nearest multiple of 90 degrees, which keeps every pose rotation a signed
    /// permutation so axis-aligned hulls are exact.
    Orbit {
        center: [f64; 3],
        radius: f64,
        height: f64,
        #[serde(default = "one")]
        revolutions: f64,
        #[serde(default = "yes")]
        quarter_turns: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory::Orbit { center: [0.0; 3], radius: 2.5, height: 1.2, revolutions: 1.0, quarter_turns: true }
    }
}

impl Trajectory {
    pub fn poses(&self, frames: u64) -> Vec<Pose> {
        (0..frames).map(|i| self.pose_at(i, frames)).collect()
    }

    fn pose_at(&self, i: u64, frames: u64) -> Pose {
        match *self {
            Trajectory::Identity => Pose::IDENTITY,
            Trajectory::Orbit { center, radius, height, revolutions, quarter_turns } => {
                let phase = 2.0 * PI * revolutions * i as f64 / frames.max(1) as f64;
                let c = Vec3::from_array(center);
                let position = Vec3::new(c.x + radius * phase.cos(), c.y + radius * phase.sin(), c.z + height);
                // Heading from the camera toward the center.
                let heading = (c.y - position.y).atan2(c.x - position.x);
                let (s, co) = if quarter_turns {
                    match ((heading / (PI / 2.0)).round() as i64).rem_euclid(4) {
                        0 => (0.0, 1.0),
                        1 => (1.0, 0.0),
                        2 => (0.0, -1.0),
                        _ => (-1.0, 0.0),
                    }
                } else {
                    heading.sin_cos()
                };
                let forward = Vec3::new(co, s, 0.0);
                let down = Vec3::new(0.0, 0.0, -1.0);
                // right = down x forward, completing a right-handed camera frame.
                let right = Vec3::new(
                    down.y * forward.z - down.z * forward.y,
                    down.z * forward.x - down.x * forward.z,
                    down.x * forward.y - down.y * forward.x,
                );
                let rotation =
                    Mat3([[right.x, down.x, forward.x], [right.y, down.y, forward.y], [right.z, down.z, forward.z]]);
                Pose::new(rotation, position).expect("orbit rotation is orthonormal by construction")
            }
        }
    }
}

/// A complete synthetic setup, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub frames: u64,
    pub objects: Vec<ObjectSpec>,
    pub occlusions: Vec<OcclusionWindow>,
    pub noise: NoiseModel,
    pub trajectory: Trajectory,
    /// Depth samples drawn per visible object per frame (0 disables).
    pub depth_samples_per_object: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field: &str, message: String| Err(SynthError::InvalidScenario { field: field.to_owned(), message });
        if self.frames == 0 {
            return bad("frames", "must be positive".into());
        }
        let n = &self.noise;
        for (field, v) in [("noise.anchor_sigma", n.anchor_sigma), ("noise.extent_sigma", n.extent_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, format!("must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&n.dropout) {
            return bad("noise.dropout", format!("must lie in [0, 1], got {}", n.dropout));
        }
        let mut ids = HashSet::new();
        for o in &self.objects {
            if o.id == 0 || !ids.insert(o.id) {
                return bad("objects.id", format!("ids must be positive and unique (offending id {})", o.id));
            }
            let e = gravity_align(&o.bbox).extents();
            let min_extent = e.l.min(e.w).min(e.h);
            if n.extent_sigma > 0.0 && n.extent_sigma >= min_extent / 4.0 {
                return bad(
                    "noise.extent_sigma",
                    format!(
                        "{} must be below a quarter of object {}'s smallest extent ({min_extent})",
                        n.extent_sigma, o.id
                    ),
                );
            }
        }
        for w in &self.occlusions {
            if !ids.contains(&w.object) {
                return bad("occlusions.object", format!("unknown object {}", w.object));
            }
            if w.start > w.end || w.end >= self.frames {
                return bad(
                    "occlusions",
                    format!(
                        "window [{}, {}] for object {} must satisfy start <= end < frames",
                        w.start, w.end, w.object
                    ),
                );
            }
        }
        if let Trajectory::Orbit { center, radius, height, revolutions, .. } = self.trajectory {
            if !center.iter().chain([radius, height, revolutions].iter()).all(|v| v.is_finite()) || radius < 0.0 {
                return bad("trajectory", "orbit parameters must be finite with radius >= 0".into());
            }
        }
        Ok(())
    }

    /// Parses the declarative scenario format (TOML; see `docs/FORMAT.md`).
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .map_or_else(String::new, |l| format!("line {l}"));
            SynthError::InvalidScenario { field, message: e.message().to_owned() }
        })?;
        let objects = raw
            .objects
            .into_iter()
            .map(|o| {
                let r = o.rotation.unwrap_or([0.0; 3]);
                let bbox = RotationEuler::new(r[0], r[1], r[2])
                    .and_then(|rot| {
                        Cuboid::new(
                            Vec3::from_array(o.anchor),
                            Extents::new(o.extents[0], o.extents[1], o.extents[2]),
                            rot,
                        )
                    })
                    .map_err(|e| SynthError::InvalidScenario {
                        field: format!("objects[id={}]", o.id),
                        message: e.to_string(),
                    })?;
                Ok(ObjectSpec { id: o.id, bbox })
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        let scenario = Scenario {
            seed: raw.seed,
            frames: raw.frames,
            objects,
            occlusions: raw
                .occlusions
                .into_iter()
                .map(|w| OcclusionWindow { object: w.object, start: w.start, end: w.end })
                .collect(),
            noise: raw.noise.unwrap_or_default(),
            trajectory: raw.trajectory.unwrap_or_default(),
            depth_samples_per_object: raw.depth_samples_per_object.unwrap_or(0),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// A table-top layout of `objects` boxes on a grid of 0.6 m cells, with
    /// `windows` occlusion windows placed on distinct objects where possible.
    pub fn random(objects: usize, frames: u64, windows: usize, seed: u64, noise: NoiseModel) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(LAYOUT_STREAM);
        let cols = (objects as f64).sqrt().ceil().max(1.0) as usize;
        let cell = 0.6;
        let origin = -(cols as f64) * cell / 2.0;
        let specs: Vec<ObjectSpec> = (0..objects)
            .map(|i| {
                let ext = Extents::new(
                    rng.random_range(0.12..0.35),
                    rng.random_range(0.12..0.35),
                    rng.random_range(0.12..0.35),
                );
                let (r, c) = (i / cols, i % cols);
                let x = origin + c as f64 * cell + rng.random_range(0.0..(cell - 0.1 - ext.l));
                let y = origin + r as f64 * cell + rng.random_range(0.0..(cell - 0.1 - ext.w));
                ObjectSpec {
                    id: i as u64 + 1,
                    bbox: Cuboid::aligned(Vec3::new(x, y, 0.0), ext).expect("positive extents"),
                }
            })
            .collect();
        let mut occlusions = Vec::with_capacity(windows);
        for w in 0..windows {
            if specs.is_empty() {
                break;
            }
            let object = specs[w % specs.len()].id;
            let earliest = frames / 10;
            let len = rng.random_range(15..=40).min(frames.saturating_sub(2 * earliest).max(1));
            let latest = frames.saturating_sub(earliest + len).max(earliest);
            let start = rng.random_range(earliest..=latest);
            occlusions.push(OcclusionWindow { object, start, end: (start + len - 1).min(frames - 1) });
        }
        Scenario {
            seed,
            frames,
            objects: specs,
            occlusions,
            noise,
            trajectory: Trajectory::default(),
            depth_samples_per_object: 0,
        }
    }
}

pub(super) const PROPOSAL_STREAM: u64 = 0;
pub(super) const DEPTH_STREAM: u64 = 1;
const LAYOUT_STREAM: u64 = 2;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    id: u64,
    anchor: [f64; 3],
    extents: [f64; 3],
    rotation: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    object: u64,
    start: u64,
    end: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: u64,
    frames: u64,
    noise: Option<NoiseModel>,
    trajectory: Option<Trajectory>,
    depth_samples_per_object: Option<usize>,
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    occlusions: Vec<RawWindow>,
}
