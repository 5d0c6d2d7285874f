use super::{Cuboid, Extents, GeometryError, Intrinsics, Mat3, RotationEuler, Vec3};

/// Hull of the box `[lo, lo + ext]` under `x -> m * x + t`.
///
/// Computed in closed form: each output extent is `sum_j |m_ij| * ext_j` and the
/// minimum corner picks, per input axis, whichever end maps lower. Exact for
/// identity and signed-permutation matrices.
fn linear_hull(m: &Mat3, t: Vec3, lo: Vec3, ext: Extents) -> (Vec3, Extents) {
    let e = [ext.l, ext.w, ext.h];
    let mapped = m.mul_vec(lo) + t;
    let mut anchor = mapped.to_array();
    let mut size = [0.0; 3];
    for (i, row) in m.0.iter().enumerate() {
        for (mij, ej) in row.iter().zip(e) {
            let d = mij * ej;
            anchor[i] += d.min(0.0);
            size[i] += d.abs();
        }
    }
    (Vec3::from_array(anchor), Extents::new(size[0], size[1], size[2]))
}

/// Rotates the box about its centroid by its Euler rotation and returns the
/// axis-aligned hull with the rotation zeroed.
pub fn gravity_align(c: &Cuboid) -> Cuboid {
    if c.rotation.is_zero() {
        return *c;
    }
    let r = c.rotation.matrix();
    let e = [c.extents.l, c.extents.w, c.extents.h];
    let mut size = [0.0; 3];
    for (i, s) in size.iter_mut().enumerate() {
        *s = (0..3).map(|j| r.0[i][j].abs() * e[j]).sum();
    }
    let extents = Extents::new(size[0], size[1], size[2]);
    let anchor = c.centroid() - extents.as_vec() * 0.5;
    Cuboid { anchor, extents, rotation: RotationEuler::ZERO }
}

/// Maps a camera-frame box into the world frame of `pose` and returns the
/// axis-aligned hull. A rotated input is gravity-aligned first.
pub fn transform_to_global(c: &Cuboid, pose: &super::Pose) -> Cuboid {
    let c = gravity_align(c);
    let (anchor, extents) = linear_hull(pose.rotation(), pose.translation(), c.anchor, c.extents);
    Cuboid { anchor, extents, rotation: RotationEuler::ZERO }
}

/// Pixel plus depth to a camera-frame point.
pub fn backproject(u: f64, v: f64, z: f64, k: &Intrinsics) -> Result<Vec3, GeometryError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(GeometryError::InvalidDepth(z));
    }
    if !u.is_finite() || !v.is_finite() {
        return Err(GeometryError::NonFinite("pixel"));
    }
    Ok(Vec3::new((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z))
}

/// Pinhole projection of a camera-frame point; `None` behind the camera.
pub fn project(p: Vec3, k: &Intrinsics) -> Option<(f64, f64)> {
    if !(p.z.is_finite() && p.z > 0.0) {
        return None;
    }
    Some((k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
}
