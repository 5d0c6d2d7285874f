//! Geometric primitives: points, intervals, cuboids, poses and pinhole intrinsics.
//!
//! All types are immutable values. Constructors validate their invariants, so a
//! value that exists is always well formed.

pub(crate) mod iou;
mod transform;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

pub use iou::{
    cuboid_intersection_volume, cuboid_union_volume, cuboid_union_volume_with, interval_intersection, interval_union,
    iou3d, iou3d_with, UnionMode,
};
pub use transform::{backproject, gravity_align, project, transform_to_global};

/// Orthonormality tolerance applied when a [`Pose`] is constructed.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("rotation angle {field}={value} outside [-pi, pi]")]
    AngleOutOfRange { field: &'static str, value: f64 },
    #[error("rotation matrix is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("rotation matrix has determinant {0}, expected +1")]
    Improper(f64),
    #[error("cuboid has a non-zero rotation; gravity-align it first")]
    NotGravityAligned,
    #[error("invalid depth {0}: must be positive")]
    InvalidDepth(f64),
}

/// A point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn component_min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A 1D extent `[start, start + length)` along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    start: f64,
    length: f64,
}

impl Interval {
    pub fn new(start: f64, length: f64) -> Result<Self, GeometryError> {
        if !start.is_finite() || !length.is_finite() {
            return Err(GeometryError::NonFinite("interval"));
        }
        if length <= 0.0 {
            return Err(GeometryError::NonPositive { field: "length", value: length });
        }
        Ok(Interval { start, length })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_row_major(v: [f64; 9]) -> Self {
        Mat3([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    pub fn rot_x(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn rot_y(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rot_z(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Euler angles in radians, applied as intrinsic Z-Y-X (`R = Rz * Ry * Rx`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationEuler {
    rx: f64,
    ry: f64,
    rz: f64,
}

impl RotationEuler {
    pub const ZERO: RotationEuler = RotationEuler { rx: 0.0, ry: 0.0, rz: 0.0 };

    pub fn new(rx: f64, ry: f64, rz: f64) -> Result<Self, GeometryError> {
        for (field, value) in [("rx", rx), ("ry", ry), ("rz", rz)] {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite("rotation"));
            }
            if !(-PI..=PI).contains(&value) {
                return Err(GeometryError::AngleOutOfRange { field, value });
            }
        }
        Ok(RotationEuler { rx, ry, rz })
    }

    pub fn rx(&self) -> f64 {
        self.rx
    }

    pub fn ry(&self) -> f64 {
        self.ry
    }

    pub fn rz(&self) -> f64 {
        self.rz
    }

    pub fn is_zero(&self) -> bool {
        self.rx == 0.0 && self.ry == 0.0 && self.rz == 0.0
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::rot_z(self.rz).mul_mat(&Mat3::rot_y(self.ry)).mul_mat(&Mat3::rot_x(self.rx))
    }
}

/// Box extents along x, y and z in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extents {
    pub l: f64,
    pub w: f64,
    pub h: f64,
}

impl Extents {
    pub const fn new(l: f64, w: f64, h: f64) -> Self {
        Extents { l, w, h }
    }

    pub fn as_vec(self) -> Vec3 {
        Vec3::new(self.l, self.w, self.h)
    }

    pub fn volume(self) -> f64 {
        self.l * self.w * self.h
    }
}

/// A 9-DOF box: minimum-corner anchor, positive extents and an Euler rotation
/// about the centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    anchor: Vec3,
    extents: Extents,
    rotation: RotationEuler,
}

impl Cuboid {
    pub fn new(anchor: Vec3, extents: Extents, rotation: RotationEuler) -> Result<Self, GeometryError> {
        if !anchor.is_finite() {
            return Err(GeometryError::NonFinite("anchor"));
        }
        for (field, value) in [("l", extents.l), ("w", extents.w), ("h", extents.h)] {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite("extents"));
            }
            if value <= 0.0 {
                return Err(GeometryError::NonPositive { field, value });
            }
        }
        Ok(Cuboid { anchor, extents, rotation })
    }

    /// Axis-aligned cuboid (zero rotation).
    pub fn aligned(anchor: Vec3, extents: Extents) -> Result<Self, GeometryError> {
        Cuboid::new(anchor, extents, RotationEuler::ZERO)
    }

    /// Builds a cuboid from `[x, y, z, l, w, h, rx, ry, rz]`.
    pub fn from_array(v: [f64; 9]) -> Result<Self, GeometryError> {
        Cuboid::new(Vec3::new(v[0], v[1], v[2]), Extents::new(v[3], v[4], v[5]), RotationEuler::new(v[6], v[7], v[8])?)
    }

    pub fn to_array(&self) -> [f64; 9] {
        let (a, e, r) = (self.anchor, self.extents, self.rotation);
        [a.x, a.y, a.z, e.l, e.w, e.h, r.rx, r.ry, r.rz]
    }

    pub fn anchor(&self) -> Vec3 {
        self.anchor
    }

    pub fn extents(&self) -> Extents {
        self.extents
    }

    pub fn rotation(&self) -> RotationEuler {
        self.rotation
    }

    pub fn is_gravity_aligned(&self) -> bool {
        self.rotation.is_zero()
    }

    /// Maximum corner (for an axis-aligned box).
    pub fn max_corner(&self) -> Vec3 {
        self.anchor + self.extents.as_vec()
    }

    pub fn centroid(&self) -> Vec3 {
        self.anchor + self.extents.as_vec() * 0.5
    }

    pub fn volume(&self) -> f64 {
        self.extents.volume()
    }

    pub fn interval(&self, axis: usize) -> Interval {
        let (start, length) = match axis {
            0 => (self.anchor.x, self.extents.l),
            1 => (self.anchor.y, self.extents.w),
            2 => (self.anchor.z, self.extents.h),
            _ => panic!("axis index {axis} out of range"),
        };
        Interval { start, length }
    }

    /// The 8 corners of the unrotated box, ordered by bits (x, y, z).
    pub fn corners(&self) -> [Vec3; 8] {
        let lo = self.anchor;
        let hi = self.max_corner();
        std::array::from_fn(|i| {
            Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
    }

    /// True if `p` lies inside the closed axis-aligned box.
    pub fn contains(&self, p: Vec3) -> bool {
        let hi = self.max_corner();
        p.x >= self.anchor.x
            && p.x <= hi.x
            && p.y >= self.anchor.y
            && p.y <= hi.y
            && p.z >= self.anchor.z
            && p.z <= hi.z
    }
}

/// Rigid camera-to-world transform `x_world = R * x_cam + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: Mat3::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        if !rotation.0.iter().flatten().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("rotation"));
        }
        if !translation.is_finite() {
            return Err(GeometryError::NonFinite("translation"));
        }
        let gram = rotation.transpose().mul_mat(&rotation);
        let mut deviation: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((gram.0[i][j] - expected).abs());
            }
        }
        if deviation > ROTATION_TOLERANCE {
            return Err(GeometryError::NotOrthonormal { deviation });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::Improper(det));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn from_translation(t: Vec3) -> Result<Self, GeometryError> {
        Pose::new(Mat3::IDENTITY, t)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -rt.mul_vec(self.translation) }
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("intrinsics"));
        }
        if fx <= 0.0 {
            return Err(GeometryError::NonPositive { field: "fx", value: fx });
        }
        if fy <= 0.0 {
            return Err(GeometryError::NonPositive { field: "fy", value: fy });
        }
        Ok(Intrinsics { fx, fy, cx, cy })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }
}

impl Default for Intrinsics {
    /// Nominal Kinect-style VGA calibration.
    fn default() -> Self {
        Intrinsics { fx: 525.0, fy: 525.0, cx: 319.5, cy: 239.5 }
    }
}
