//! Global object database and match-or-register labeling.
//!
//! Every frame's proposals are gravity-aligned, mapped into the world frame and
//! scored against the stored tracks by 3D IoU. A proposal that overlaps a track
//! by at least `tau` inherits its label; anything else is registered as a new
//! object. Tracks are never evicted, so an object that disappears behind an
//! occluder is re-identified as soon as a proposal lands on its stored box.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    gravity_align, iou::iou_unchecked, transform_to_global, Cuboid, Extents, GeometryError, UnionMode, Vec3,
};
use crate::io::{FrameMatches, FrameObservation, TrackFile};

pub const DEFAULT_TAU: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("tau must lie in (0, 1], got {0}")]
    InvalidTau(f64),
    #[error("proposal {proposal}: {source}")]
    Proposal { proposal: usize, source: GeometryError },
    #[error("frame {frame}: {source}")]
    Frame { frame: u64, source: Box<TrackError> },
    #[error("invalid registry: {0}")]
    InvalidRegistry(String),
}

/// Persistent object identifier, issued sequentially from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// Accept (proposal, track) pairs in descending IoU order, each side at most once.
    #[default]
    Greedy,
    /// Each proposal independently takes its best track; two proposals may share one.
    Argmax,
}

impl AssignmentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssignmentMode::Greedy => "greedy",
            AssignmentMode::Argmax => "argmax",
        }
    }
}

/// How a matched observation updates the stored box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Running mean of anchor and extents over all observations.
    #[default]
    CountWeighted,
    /// Keep the box from the first observation.
    KeepFirst,
    /// Replace with the latest observation.
    KeepLatest,
}

impl FusionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMode::CountWeighted => "count_weighted",
            FusionMode::KeepFirst => "keep_first",
            FusionMode::KeepLatest => "keep_latest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    tau: f64,
    pub union_mode: UnionMode,
    pub assignment: AssignmentMode,
    pub fusion: FusionMode,
}

impl TrackerConfig {
    pub fn new(tau: f64) -> Result<Self, TrackError> {
        Ok(TrackerConfig { tau: check_tau(tau)?, ..Default::default() })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self, TrackError> {
        self.tau = check_tau(tau)?;
        Ok(self)
    }

    pub fn with_union_mode(mut self, mode: UnionMode) -> Self {
        self.union_mode = mode;
        self
    }

    pub fn with_assignment(mut self, mode: AssignmentMode) -> Self {
        self.assignment = mode;
        self
    }

    pub fn with_fusion(mut self, mode: FusionMode) -> Self {
        self.fusion = mode;
        self
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            tau: DEFAULT_TAU,
            union_mode: UnionMode::Paper,
            assignment: AssignmentMode::Greedy,
            fusion: FusionMode::CountWeighted,
        }
    }
}

fn check_tau(tau: f64) -> Result<f64, TrackError> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(tau)
    } else {
        Err(TrackError::InvalidTau(tau))
    }
}

/// A labeled world-frame box with its observation history.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTrack {
    label: Label,
    bbox: Cuboid,
    observation_count: u64,
    first_seen: u64,
    last_seen: u64,
    heat: f64,
}

impl ObjectTrack {
    pub fn new(
        label: Label,
        bbox: Cuboid,
        observation_count: u64,
        first_seen: u64,
        last_seen: u64,
        heat: f64,
    ) -> Result<Self, TrackError> {
        let bad = |msg: &str| Err(TrackError::InvalidRegistry(format!("track {label}: {msg}")));
        if label.0 == 0 {
            return bad("labels start at 1");
        }
        if !bbox.is_gravity_aligned() {
            return bad("box must be gravity-aligned");
        }
        if observation_count == 0 {
            return bad("observation_count must be at least 1");
        }
        if last_seen < first_seen {
            return bad("last_seen precedes first_seen");
        }
        if !(heat.is_finite() && heat >= 0.0) {
            return bad("heat must be finite and non-negative");
        }
        Ok(ObjectTrack { label, bbox, observation_count, first_seen, last_seen, heat })
    }

    fn first(label: Label, bbox: Cuboid, frame_index: u64) -> Self {
        ObjectTrack { label, bbox, observation_count: 1, first_seen: frame_index, last_seen: frame_index, heat: 1.0 }
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn bbox(&self) -> &Cuboid {
        &self.bbox
    }

    pub fn observation_count(&self) -> u64 {
        self.observation_count
    }

    pub fn first_seen(&self) -> u64 {
        self.first_seen
    }

    pub fn last_seen(&self) -> u64 {
        self.last_seen
    }

    pub fn heat(&self) -> f64 {
        self.heat
    }
}

/// Fuses a matched observation into a track.
pub fn update_track(
    track: &ObjectTrack,
    observation: &Cuboid,
    frame_index: u64,
    fusion: FusionMode,
) -> Result<ObjectTrack, GeometryError> {
    let observation = gravity_align(observation);
    let bbox = match fusion {
        FusionMode::CountWeighted => {
            let n = track.observation_count as f64;
            let mean = |old: f64, obs: f64| (n * old + obs) / (n + 1.0);
            let (a, e) = (track.bbox.anchor(), track.bbox.extents());
            let (oa, oe) = (observation.anchor(), observation.extents());
            Cuboid::aligned(
                Vec3::new(mean(a.x, oa.x), mean(a.y, oa.y), mean(a.z, oa.z)),
                Extents::new(mean(e.l, oe.l), mean(e.w, oe.w), mean(e.h, oe.h)),
            )?
        }
        FusionMode::KeepFirst => track.bbox,
        FusionMode::KeepLatest => observation,
    };
    Ok(ObjectTrack {
        label: track.label,
        bbox,
        observation_count: track.observation_count + 1,
        first_seen: track.first_seen,
        last_seen: frame_index.max(track.last_seen),
        heat: track.heat + 1.0,
    })
}

/// The object database: tracks in ascending label order plus the next label
/// to issue.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    tracks: Vec<ObjectTrack>,
    next_label: Label,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new()
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry { tracks: Vec::new(), next_label: Label(1) }
    }

    /// Rebuilds a registry from stored parts, checking label order and the
    /// counter.
    pub fn from_parts(tracks: Vec<ObjectTrack>, next_label: Label) -> Result<Self, TrackError> {
        for pair in tracks.windows(2) {
            if pair[0].label >= pair[1].label {
                return Err(TrackError::InvalidRegistry(format!(
                    "labels not strictly increasing ({} then {})",
                    pair[0].label, pair[1].label
                )));
            }
        }
        if let Some(last) = tracks.last() {
            if next_label <= last.label {
                return Err(TrackError::InvalidRegistry(format!(
                    "next_label {next_label} does not exceed issued label {}",
                    last.label
                )));
            }
        }
        if next_label.0 == 0 {
            return Err(TrackError::InvalidRegistry("next_label must be positive".into()));
        }
        Ok(Registry { tracks, next_label })
    }

    pub fn tracks(&self) -> &[ObjectTrack] {
        &self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn next_label(&self) -> Label {
        self.next_label
    }

    pub fn get(&self, label: Label) -> Option<&ObjectTrack> {
        self.index_of(label).map(|i| &self.tracks[i])
    }

    fn index_of(&self, label: Label) -> Option<usize> {
        self.tracks.binary_search_by_key(&label, |t| t.label).ok()
    }

    /// Appends a track for `bbox` under the next label.
    pub fn register_new(&mut self, bbox: Cuboid, frame_index: u64) -> Label {
        let label = self.next_label;
        self.tracks.push(ObjectTrack::first(label, gravity_align(&bbox), frame_index));
        self.next_label = Label(label.0 + 1);
        label
    }
}

/// Best-overlapping track for a proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestMatch {
    pub label: Option<Label>,
    pub iou: f64,
}

/// Single pass over the registry; ties go to the lower label.
pub fn best_match(proposal: &Cuboid, registry: &Registry, mode: UnionMode) -> Result<BestMatch, GeometryError> {
    if !proposal.is_gravity_aligned() {
        return Err(GeometryError::NotGravityAligned);
    }
    let mut best = BestMatch { label: None, iou: 0.0 };
    for track in &registry.tracks {
        let iou = iou_unchecked(proposal, &track.bbox, mode);
        if iou > best.iou {
            best = BestMatch { label: Some(track.label), iou };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub proposal_index: usize,
    pub assigned_label: Label,
    pub best_iou: f64,
    pub is_new: bool,
}

/// Labels one frame of world-frame proposals and updates `registry` in place.
///
/// For a proposal that ends up unmatched, `best_iou` is its highest IoU against
/// the tracks left unclaimed in this frame, which is below `tau` by construction.
pub fn assign_labels(
    proposals: &[Cuboid],
    frame_index: u64,
    registry: &mut Registry,
    cfg: &TrackerConfig,
) -> Result<Vec<MatchResult>, TrackError> {
    for (proposal, c) in proposals.iter().enumerate() {
        if !c.is_gravity_aligned() {
            return Err(TrackError::Proposal { proposal, source: GeometryError::NotGravityAligned });
        }
    }
    let existing = registry.tracks.len();
    let mut matched: Vec<Option<(usize, f64)>> = vec![None; proposals.len()];
    let mut best_free = vec![0.0f64; proposals.len()];

    match cfg.assignment {
        AssignmentMode::Greedy => {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (p, c) in proposals.iter().enumerate() {
                for (t, track) in registry.tracks.iter().enumerate() {
                    let iou = iou_unchecked(c, &track.bbox, cfg.union_mode);
                    if iou >= cfg.tau {
                        pairs.push((iou, t, p));
                    }
                }
            }
            // Track index order equals label order.
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut track_used = vec![false; existing];
            for (iou, t, p) in pairs {
                if matched[p].is_none() && !track_used[t] {
                    matched[p] = Some((t, iou));
                    track_used[t] = true;
                }
            }
            for (p, c) in proposals.iter().enumerate() {
                if matched[p].is_some() {
                    continue;
                }
                best_free[p] = registry
                    .tracks
                    .iter()
                    .zip(&track_used)
                    .filter(|(_, used)| !**used)
                    .map(|(track, _)| iou_unchecked(c, &track.bbox, cfg.union_mode))
                    .fold(0.0, f64::max);
            }
        }
        AssignmentMode::Argmax => {
            for (p, c) in proposals.iter().enumerate() {
                let mut best: Option<(usize, f64)> = None;
                for (t, track) in registry.tracks.iter().enumerate() {
                    let iou = iou_unchecked(c, &track.bbox, cfg.union_mode);
                    if best.map_or(iou > 0.0, |(_, b)| iou.partial_cmp(&b) == Some(Ordering::Greater)) {
                        best = Some((t, iou));
                    }
                }
                match best {
                    Some((t, iou)) if iou >= cfg.tau => matched[p] = Some((t, iou)),
                    Some((_, iou)) => best_free[p] = iou,
                    None => {}
                }
            }
        }
    }

    let mut results = Vec::with_capacity(proposals.len());
    for (p, c) in proposals.iter().enumerate() {
        if let Some((t, iou)) = matched[p] {
            let updated = update_track(&registry.tracks[t], c, frame_index, cfg.fusion)
                .map_err(|source| TrackError::Proposal { proposal: p, source })?;
            registry.tracks[t] = updated;
            results.push(MatchResult {
                proposal_index: p,
                assigned_label: registry.tracks[t].label,
                best_iou: iou,
                is_new: false,
            });
        }
    }
    for (p, c) in proposals.iter().enumerate() {
        if matched[p].is_none() {
            let label = registry.register_new(*c, frame_index);
            results.push(MatchResult {
                proposal_index: p,
                assigned_label: label,
                best_iou: best_free[p],
                is_new: true,
            });
        }
    }
    results.sort_by_key(|r| r.proposal_index);
    Ok(results)
}

/// Maps a frame's camera-frame proposals into the world frame.
pub fn register_frame(frame: &FrameObservation) -> Vec<Cuboid> {
    frame.proposals.iter().map(|c| transform_to_global(c, &frame.pose)).collect()
}

/// Gravity-align, transform to world and assign labels for one frame.
///
/// Takes the registry by value and hands back the updated one.
pub fn process_frame(
    frame: &FrameObservation,
    mut registry: Registry,
    cfg: &TrackerConfig,
) -> Result<(Registry, Vec<MatchResult>), TrackError> {
    let global = register_frame(frame);
    let results = assign_labels(&global, frame.frame_index, &mut registry, cfg)
        .map_err(|e| TrackError::Frame { frame: frame.frame_index, source: Box::new(e) })?;
    Ok((registry, results))
}

/// Stateful wrapper for streaming use.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    registry: Registry,
    config: TrackerConfig,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Tracker { registry: Registry::new(), config }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn into_registry(self) -> Registry {
        self.registry
    }

    pub fn step(&mut self, frame: &FrameObservation) -> Result<Vec<MatchResult>, TrackError> {
        let global = register_frame(frame);
        assign_labels(&global, frame.frame_index, &mut self.registry, &self.config)
            .map_err(|e| TrackError::Frame { frame: frame.frame_index, source: Box::new(e) })
    }
}

/// Runs a fresh tracker over a whole scene.
pub fn track_scene(frames: &[FrameObservation], config: TrackerConfig) -> Result<TrackFile, TrackError> {
    let mut tracker = Tracker::new(config);
    let frames = frames
        .iter()
        .map(|f| Ok(FrameMatches { frame_index: f.frame_index, matches: tracker.step(f)? }))
        .collect::<Result<Vec<_>, TrackError>>()?;
    Ok(TrackFile { config, frames, registry: tracker.into_registry() })
}
