//! Online 3D object tracking from per-frame cuboid proposals.
//!
//! Proposals arrive in the camera frame, are lifted to gravity-aligned boxes
//! in the world frame and matched against a persistent registry by 3D IoU.
//! Objects keep their label across occlusions because tracks are never
//! dropped. A sparse voxel heatmap accumulates depth evidence alongside.

pub mod geometry;
pub mod heatmap;
pub mod io;
pub mod synth;
pub mod tracker;

pub use geometry::{Cuboid, Extents, GeometryError, Intrinsics, Mat3, Pose, RotationEuler, UnionMode, Vec3};
pub use heatmap::{HeatCell, HeatmapError, HeatmapGrid};
pub use io::{DepthSample, FormatError, FrameObservation};
pub use tracker::{
    AssignmentMode, FusionMode, Label, MatchResult, ObjectTrack, Registry, TrackError, Tracker, TrackerConfig,
};
