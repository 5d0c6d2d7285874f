//! Sparse voxel heatmap of scene points.
//!
//! A point that falls into an occupied voxel is a matching point: it adds its
//! heat to the cell and pulls the cell's running-mean position toward itself.
//! Points landing in empty voxels start new cells.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::geometry::{backproject, Cuboid, Extents, GeometryError, Intrinsics, Pose, Vec3};
use crate::io::DepthSample;

pub const DEFAULT_VOXEL_SIZE: f64 = 0.02;
pub const DEFAULT_MIN_CELLS: usize = 8;

/// Coordinates beyond this many voxels from the origin are rejected so keys
/// stay exactly representable.
const MAX_KEY: f64 = 9.0e15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeatmapError {
    #[error("voxel size must be positive and finite, got {0}")]
    InvalidVoxelSize(f64),
    #[error("point {index} is not finite")]
    NonFinitePoint { index: usize },
    #[error("point {index} lies outside the addressable grid")]
    OutOfRange { index: usize },
    #[error("point {index} has heat {heat}; heat must be positive and finite")]
    InvalidHeat { index: usize, heat: f64 },
    #[error("depth sample {index}: {source}")]
    Sample { index: usize, source: GeometryError },
    #[error("invalid cell {key:?}: {reason}")]
    InvalidCell { key: VoxelKey, reason: String },
}

pub type VoxelKey = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    mean_position: Vec3,
    heat: f64,
    sample_count: u64,
}

impl HeatCell {
    pub fn mean_position(&self) -> Vec3 {
        self.mean_position
    }

    pub fn heat(&self) -> f64 {
        self.heat
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    fn absorb(&mut self, p: Vec3, heat: f64) {
        self.sample_count += 1;
        self.heat += heat;
        let n = self.sample_count as f64;
        self.mean_position = Vec3::new(
            running_mean(self.mean_position.x, p.x, n),
            running_mean(self.mean_position.y, p.y, n),
            running_mean(self.mean_position.z, p.z, n),
        );
    }
}

/// `m + (p - m) / n`, clamped to `[min(m, p), max(m, p)]`. The exact update
/// always lies in that range; the clamp only removes rounding overshoot, which
/// keeps the mean inside the hull of its samples and therefore in its voxel.
fn running_mean(m: f64, p: f64, n: f64) -> f64 {
    let next = m + (p - m) / n;
    next.clamp(m.min(p), m.max(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    voxel_size: f64,
    cells: HashMap<VoxelKey, HeatCell>,
}

impl HeatmapGrid {
    pub fn new(voxel_size: f64) -> Result<Self, HeatmapError> {
        if !(voxel_size.is_finite() && voxel_size > 0.0) {
            return Err(HeatmapError::InvalidVoxelSize(voxel_size));
        }
        Ok(HeatmapGrid { voxel_size, cells: HashMap::new() })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, key: &VoxelKey) -> Option<&HeatCell> {
        self.cells.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelKey, &HeatCell)> {
        self.cells.iter()
    }

    /// Cells in ascending key order.
    pub fn sorted_cells(&self) -> Vec<(VoxelKey, HeatCell)> {
        let mut out: Vec<_> = self.cells.iter().map(|(k, c)| (*k, *c)).collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }

    pub fn total_heat(&self) -> f64 {
        self.cells.values().map(|c| c.heat).sum()
    }

    pub fn key_of(&self, p: Vec3) -> VoxelKey {
        let s = self.voxel_size;
        [(p.x / s).floor() as i64, (p.y / s).floor() as i64, (p.z / s).floor() as i64]
    }

    /// Inserts a stored cell, e.g. when loading a grid from disk.
    pub fn insert_cell(
        &mut self,
        key: VoxelKey,
        mean_position: Vec3,
        heat: f64,
        sample_count: u64,
    ) -> Result<(), HeatmapError> {
        let bad = |reason: &str| Err(HeatmapError::InvalidCell { key, reason: reason.to_owned() });
        if !mean_position.is_finite() {
            return bad("mean position is not finite");
        }
        if !(heat.is_finite() && heat > 0.0) {
            return bad("heat must be positive");
        }
        if sample_count == 0 {
            return bad("sample count must be positive");
        }
        if self.key_of(mean_position) != key {
            return bad("mean position lies outside its voxel");
        }
        if self.cells.contains_key(&key) {
            return bad("duplicate voxel");
        }
        self.cells.insert(key, HeatCell { mean_position, heat, sample_count });
        Ok(())
    }

    /// Adds heat-weighted points. All points are validated before any is
    /// applied, so an error leaves the grid untouched.
    pub fn update(&mut self, points: &[(Vec3, f64)]) -> Result<(), HeatmapError> {
        let limit = MAX_KEY * self.voxel_size;
        for (index, (p, heat)) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(HeatmapError::NonFinitePoint { index });
            }
            if p.x.abs() > limit || p.y.abs() > limit || p.z.abs() > limit {
                return Err(HeatmapError::OutOfRange { index });
            }
            if !(heat.is_finite() && *heat > 0.0) {
                return Err(HeatmapError::InvalidHeat { index, heat: *heat });
            }
        }
        for &(p, heat) in points {
            let key = self.key_of(p);
            self.cells.entry(key).and_modify(|c| c.absorb(p, heat)).or_insert(HeatCell {
                mean_position: p,
                heat,
                sample_count: 1,
            });
        }
        Ok(())
    }

    /// Backprojects depth samples through `k`, maps them by `pose` and adds
    /// them with unit heat.
    pub fn merge_frame(
        &mut self,
        pose: &Pose,
        depth_samples: &[DepthSample],
        k: &Intrinsics,
    ) -> Result<(), HeatmapError> {
        let points = depth_samples
            .iter()
            .enumerate()
            .map(|(index, s)| {
                backproject(s.u, s.v, s.z, k)
                    .map(|p| (pose.apply(p), 1.0))
                    .map_err(|source| HeatmapError::Sample { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.update(&points)
    }

    /// Object boundaries from hot cells.
    ///
    /// Cells with `heat >= min_heat` are grouped into 26-connected components;
    /// components smaller than `min_cells` are dropped and each survivor yields
    /// the box spanning its voxels. Components whose boxes overlap are merged so
    /// the returned boxes are pairwise disjoint. Output is sorted by anchor.
    pub fn extract_boundaries(&self, min_heat: f64, min_cells: usize) -> Vec<Cuboid> {
        let hot: HashSet<VoxelKey> = self.cells.iter().filter(|(_, c)| c.heat >= min_heat).map(|(k, _)| *k).collect();
        let mut seeds: Vec<VoxelKey> = hot.iter().copied().collect();
        seeds.sort_unstable();

        let mut seen: HashSet<VoxelKey> = HashSet::with_capacity(hot.len());
        let mut boxes: Vec<([i64; 3], [i64; 3])> = Vec::new();
        let mut queue = VecDeque::new();
        for seed in seeds {
            if !seen.insert(seed) {
                continue;
            }
            let (mut lo, mut hi, mut count) = (seed, seed, 0usize);
            queue.push_back(seed);
            while let Some(k) = queue.pop_front() {
                count += 1;
                for a in 0..3 {
                    lo[a] = lo[a].min(k[a]);
                    hi[a] = hi[a].max(k[a]);
                }
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let n = [k[0] + dx, k[1] + dy, k[2] + dz];
                            if hot.contains(&n) && seen.insert(n) {
                                queue.push_back(n);
                            }
                        }
                    }
                }
            }
            if count >= min_cells {
                boxes.push((lo, hi));
            }
        }

        merge_overlapping(&mut boxes);
        boxes.sort_unstable();
        let s = self.voxel_size;
        boxes
            .into_iter()
            .filter_map(|(lo, hi)| {
                let anchor = Vec3::new(lo[0] as f64 * s, lo[1] as f64 * s, lo[2] as f64 * s);
                let ext = |a: usize| (hi[a] - lo[a] + 1) as f64 * s;
                Cuboid::aligned(anchor, Extents::new(ext(0), ext(1), ext(2))).ok()
            })
            .collect()
    }
}

/// Inclusive voxel ranges overlap when they share at least one voxel.
fn merge_overlapping(boxes: &mut Vec<([i64; 3], [i64; 3])>) {
    let overlaps =
        |a: &([i64; 3], [i64; 3]), b: &([i64; 3], [i64; 3])| (0..3).all(|i| a.0[i] <= b.1[i] && b.0[i] <= a.1[i]);
    loop {
        let mut merged = false;
        'scan: for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if overlaps(&boxes[i], &boxes[j]) {
                    let b = boxes.swap_remove(j);
                    let a = &mut boxes[i];
                    for k in 0..3 {
                        a.0[k] = a.0[k].min(b.0[k]);
                        a.1[k] = a.1[k].max(b.1[k]);
                    }
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            break;
        }
    }
}
