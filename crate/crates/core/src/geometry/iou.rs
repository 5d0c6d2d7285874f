use serde::{Deserialize, Serialize};

use super::{Cuboid, GeometryError, Interval};

/// How the union volume of two boxes is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionMode {
    /// Product of the three per-axis interval unions.
    #[default]
    Paper,
    /// `vol(a) + vol(b) - vol(a ∩ b)`.
    InclusionExclusion,
}

impl UnionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnionMode::Paper => "paper",
            UnionMode::InclusionExclusion => "inclusion_exclusion",
        }
    }
}

/// Overlap length of two intervals; zero when they are disjoint.
#[inline]
pub fn interval_intersection(a: Interval, b: Interval) -> f64 {
    overlap(a.start, a.length, b.start, b.length)
}

/// `a.length + b.length - overlap`, which is the plain sum when disjoint.
#[inline]
pub fn interval_union(a: Interval, b: Interval) -> f64 {
    a.length + b.length - interval_intersection(a, b)
}

#[inline]
fn overlap(a_start: f64, a_len: f64, b_start: f64, b_len: f64) -> f64 {
    let a_end = a_start + a_len;
    let b_end = b_start + b_len;
    // Branch-free: the clamp covers disjoint intervals.
    (a_end.min(b_end) - a_start.max(b_start)).max(0.0)
}

fn check_aligned(a: &Cuboid, b: &Cuboid) -> Result<(), GeometryError> {
    if a.is_gravity_aligned() && b.is_gravity_aligned() {
        Ok(())
    } else {
        Err(GeometryError::NotGravityAligned)
    }
}

#[inline]
fn axis_overlaps(a: &Cuboid, b: &Cuboid) -> [f64; 3] {
    let (aa, ae, ba, be) = (a.anchor, a.extents, b.anchor, b.extents);
    [overlap(aa.x, ae.l, ba.x, be.l), overlap(aa.y, ae.w, ba.y, be.w), overlap(aa.z, ae.h, ba.z, be.h)]
}

#[inline]
fn intersection_unchecked(a: &Cuboid, b: &Cuboid) -> f64 {
    let [x, y, z] = axis_overlaps(a, b);
    x * y * z
}

#[inline]
fn union_unchecked(a: &Cuboid, b: &Cuboid, mode: UnionMode) -> f64 {
    match mode {
        UnionMode::Paper => {
            let [x, y, z] = axis_overlaps(a, b);
            (a.extents.l + b.extents.l - x) * (a.extents.w + b.extents.w - y) * (a.extents.h + b.extents.h - z)
        }
        UnionMode::InclusionExclusion => a.volume() + b.volume() - intersection_unchecked(a, b),
    }
}

/// Intersection volume of two gravity-aligned boxes in a common frame.
pub fn cuboid_intersection_volume(a: &Cuboid, b: &Cuboid) -> Result<f64, GeometryError> {
    check_aligned(a, b)?;
    Ok(intersection_unchecked(a, b))
}

/// Union volume as the product of per-axis interval unions.
///
/// This is not `vol(a) + vol(b) - vol(a ∩ b)` in general; see
/// [`cuboid_union_volume_with`] for the inclusion-exclusion form.
pub fn cuboid_union_volume(a: &Cuboid, b: &Cuboid) -> Result<f64, GeometryError> {
    cuboid_union_volume_with(a, b, UnionMode::Paper)
}

pub fn cuboid_union_volume_with(a: &Cuboid, b: &Cuboid, mode: UnionMode) -> Result<f64, GeometryError> {
    check_aligned(a, b)?;
    Ok(union_unchecked(a, b, mode))
}

/// IoU with the product-form union.
pub fn iou3d(a: &Cuboid, b: &Cuboid) -> Result<f64, GeometryError> {
    iou3d_with(a, b, UnionMode::Paper)
}

pub fn iou3d_with(a: &Cuboid, b: &Cuboid, mode: UnionMode) -> Result<f64, GeometryError> {
    check_aligned(a, b)?;
    Ok(iou_unchecked(a, b, mode))
}

/// IoU for boxes already known to be gravity-aligned. The tracker's inner
/// loop calls this directly; registry boxes are aligned by construction.
#[inline]
pub(crate) fn iou_unchecked(a: &Cuboid, b: &Cuboid, mode: UnionMode) -> f64 {
    let [x, y, z] = axis_overlaps(a, b);
    let inter = x * y * z;
    if inter == 0.0 {
        return 0.0;
    }
    // (s + l) - s need not round back to l, so identical boxes are answered
    // directly rather than trusting the arithmetic to cancel.
    if a == b {
        return 1.0;
    }
    let union = match mode {
        UnionMode::Paper => {
            (a.extents.l + b.extents.l - x) * (a.extents.w + b.extents.w - y) * (a.extents.h + b.extents.h - z)
        }
        UnionMode::InclusionExclusion => a.volume() + b.volume() - inter,
    };
    (inter / union).clamp(0.0, 1.0)
}
