//! Frame-tagged geometric primitives shared by every pipeline stage.
//!
//! Everything here is plain value data. Clouds validate their points once at
//! construction; stages that derive new clouds from valid ones keep that
//! guarantee without re-checking.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 3D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Checked constructor; rejects NaN and infinities.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Point3 { x, y, z };
        if p.is_finite() {
            Ok(p)
        } else {
            Err(Error::NonFinitePoint { index: 0 })
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

impl From<Vector3<f64>> for Point3 {
    fn from(v: Vector3<f64>) -> Self {
        Point3::new(v.x, v.y, v.z)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// One sensor sweep: points in storage order, tagged with their frame and
/// acquisition time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame_id: String,
    stamp: u64,
}

impl PointCloud {
    /// Builds a cloud, rejecting any point with a NaN or infinite coordinate.
    pub fn new(points: Vec<Point3>, frame_id: impl Into<String>, stamp: u64) -> Result<Self> {
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinitePoint { index });
        }
        Ok(Self::from_valid(points, frame_id.into(), stamp))
    }

    pub fn empty(frame_id: impl Into<String>, stamp: u64) -> Self {
        Self::from_valid(Vec::new(), frame_id.into(), stamp)
    }

    /// Caller guarantees every point is finite.
    pub(crate) fn from_valid(points: Vec<Point3>, frame_id: String, stamp: u64) -> Self {
        debug_assert!(points.iter().all(Point3::is_finite));
        PointCloud {
            points,
            frame_id,
            stamp,
        }
    }

    /// Same frame and stamp, different points (all derived from valid ones).
    pub(crate) fn with_points(&self, points: Vec<Point3>) -> Self {
        Self::from_valid(points, self.frame_id.clone(), self.stamp)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points at the given indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        self.with_points(indices.iter().map(|&i| self.points[i]).collect())
    }
}

/// Rigid motion mapping coordinates in `child_frame` into `parent_frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
    parent_frame: String,
    child_frame: String,
}

impl RigidTransform {
    /// `rotation` is `(w, x, y, z)`; it is normalized here.
    pub fn new(
        rotation: [f64; 4],
        translation: [f64; 3],
        parent_frame: impl Into<String>,
        child_frame: impl Into<String>,
    ) -> Result<Self> {
        let [w, x, y, z] = rotation;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidParams(format!(
                "rotation quaternion {rotation:?} cannot be normalized"
            )));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "translation {translation:?} is not finite"
            )));
        }
        Ok(RigidTransform {
            rotation: UnitQuaternion::from_quaternion(q),
            translation: Vector3::from(translation),
            parent_frame: parent_frame.into(),
            child_frame: child_frame.into(),
        })
    }

    /// Builds a transform from roll/pitch/yaw (radians, applied as yaw·pitch·roll).
    pub fn from_euler(
        roll: f64,
        pitch: f64,
        yaw: f64,
        translation: [f64; 3],
        parent_frame: impl Into<String>,
        child_frame: impl Into<String>,
    ) -> Self {
        RigidTransform {
            rotation: UnitQuaternion::from_euler_angles(roll, pitch, yaw),
            translation: Vector3::from(translation),
            parent_frame: parent_frame.into(),
            child_frame: child_frame.into(),
        }
    }

    /// The identity map from `frame` to itself.
    pub fn identity(frame: impl Into<String>) -> Self {
        let frame = frame.into();
        RigidTransform {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
            parent_frame: frame.clone(),
            child_frame: frame,
        }
    }

    /// Rotation as `(w, x, y, z)`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    pub fn parent_frame(&self) -> &str {
        &self.parent_frame
    }

    pub fn child_frame(&self) -> &str {
        &self.child_frame
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    #[inline]
    pub fn apply(&self, p: Point3) -> Point3 {
        Point3::from(self.rotation * p.to_vector() + self.translation)
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
            parent_frame: self.child_frame.clone(),
            child_frame: self.parent_frame.clone(),
        }
    }
}

/// Applies `b` then `a`: the result maps `b.child_frame` into `a.parent_frame`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> Result<RigidTransform> {
    if a.child_frame != b.parent_frame {
        return Err(Error::frame_mismatch(&a.child_frame, &b.parent_frame));
    }
    Ok(RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
        parent_frame: a.parent_frame.clone(),
        child_frame: b.child_frame.clone(),
    })
}

/// Re-expresses a cloud from `tf.child_frame` in `tf.parent_frame`.
pub fn transform_cloud(cloud: &PointCloud, tf: &RigidTransform) -> Result<PointCloud> {
    if cloud.frame_id() != tf.child_frame() {
        return Err(Error::frame_mismatch(tf.child_frame(), cloud.frame_id()));
    }
    let r = tf.rotation_matrix();
    let t = tf.translation;
    let points = cloud
        .points()
        .iter()
        .map(|p| {
            Point3::new(
                r[(0, 0)] * p.x + r[(0, 1)] * p.y + r[(0, 2)] * p.z + t.x,
                r[(1, 0)] * p.x + r[(1, 1)] * p.y + r[(1, 2)] * p.z + t.y,
                r[(2, 0)] * p.x + r[(2, 1)] * p.y + r[(2, 2)] * p.z + t.z,
            )
        })
        .collect();
    Ok(PointCloud::from_valid(
        points,
        tf.parent_frame.clone(),
        cloud.stamp(),
    ))
}

/// The plane `{p : normal·p + d = 0}` with a unit normal pointing up (`normal.z >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Point3,
    d: f64,
}

impl Plane {
    /// Normalizes `(normal, d)` jointly and flips the pair so the normal points up.
    /// Returns `None` for a zero or non-finite normal.
    pub fn new(normal: Point3, d: f64) -> Option<Plane> {
        let n = normal.norm();
        if !n.is_finite() || n == 0.0 || !d.is_finite() {
            return None;
        }
        let (mut normal, mut d) = (normal * (1.0 / n), d / n);
        if normal.z < 0.0 {
            normal = normal * -1.0;
            d = -d;
        }
        Some(Plane { normal, d })
    }

    /// Plane through three points; `None` when they are collinear.
    pub fn through(a: Point3, b: Point3, c: Point3) -> Option<Plane> {
        let normal = (b - a).cross(&(c - a));
        let n = normal.norm();
        // relative collinearity test so tiny but valid triangles survive
        let scale = (b - a).norm() * (c - a).norm();
        if scale == 0.0 || n <= 1e-12 * scale {
            return None;
        }
        let normal = normal * (1.0 / n);
        Plane::new(normal, -normal.dot(&a))
    }

    pub fn normal(&self) -> Point3 {
        self.normal
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    #[inline]
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(p) + self.d
    }

    #[inline]
    pub fn distance(&self, p: &Point3) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Angle between the normal and the +z axis, in radians.
    pub fn tilt(&self) -> f64 {
        self.normal.z.clamp(-1.0, 1.0).acos()
    }
}

/// An oriented obstacle box: yaw-rotated footprint extruded along z.
///
/// `extents[0]` runs along the heading axis `(cos yaw, sin yaw)`, `extents[1]`
/// along the perpendicular, `extents[2]` is the height. Yaw is kept in
/// `[0, π/2)`; a rectangle is unchanged by quarter turns once its side
/// lengths are swapped, so every footprint has exactly one representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    center: Point3,
    extents: [f64; 3],
    yaw: f64,
    point_count: usize,
    cluster_id: usize,
}

impl Detection {
    pub fn new(
        center: Point3,
        extents: [f64; 3],
        yaw: f64,
        point_count: usize,
        cluster_id: usize,
    ) -> Result<Detection> {
        if !center.is_finite() {
            return Err(Error::InvalidDetection("center is not finite".into()));
        }
        if extents.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::InvalidDetection(format!(
                "extents {extents:?} must be finite and positive"
            )));
        }
        if !yaw.is_finite() {
            return Err(Error::InvalidDetection("yaw is not finite".into()));
        }
        if point_count == 0 {
            return Err(Error::InvalidDetection("point_count must be positive".into()));
        }
        let (yaw, swap) = normalize_quarter_turn(yaw);
        let extents = if swap {
            [extents[1], extents[0], extents[2]]
        } else {
            extents
        };
        Ok(Detection {
            center,
            extents,
            yaw,
            point_count,
            cluster_id,
        })
    }

    pub fn with_cluster_id(mut self, cluster_id: usize) -> Detection {
        self.cluster_id = cluster_id;
        self
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn cluster_id(&self) -> usize {
        self.cluster_id
    }

    pub fn footprint_area(&self) -> f64 {
        self.extents[0] * self.extents[1]
    }

    /// Footprint corners in the xy-plane, counter-clockwise.
    pub fn footprint_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = 0.5 * self.extents[0];
        let hw = 0.5 * self.extents[1];
        [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)].map(|(u, v)| {
            [
                self.center.x + c * u - s * v,
                self.center.y + s * u + c * v,
            ]
        })
    }

    /// Whether `(x, y)` lies inside the closed footprint rectangle.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= 0.5 * self.extents[0] && v.abs() <= 0.5 * self.extents[1]
    }
}

/// Reduces `yaw` into `[0, π/2)`; the flag is set when an odd number of
/// quarter turns was removed (side lengths must then be swapped).
pub fn normalize_quarter_turn(yaw: f64) -> (f64, bool) {
    let k = (yaw / FRAC_PI_2).floor();
    let mut r = yaw - k * FRAC_PI_2;
    let mut odd = (k as i64).rem_euclid(2) == 1;
    if r >= FRAC_PI_2 {
        r -= FRAC_PI_2;
        odd = !odd;
    }
    if r < 0.0 {
        r = 0.0;
    }
    (r, odd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn sample_cloud() -> PointCloud {
        PointCloud::new(
            vec![
                Point3::new(1.0, 2.0, 3.0),
                Point3::new(-1.0, 0.5, 0.0),
                Point3::new(0.0, 0.0, 0.0),
            ],
            "sensor",
            42,
        )
        .unwrap()
    }

    #[test]
    fn cloud_rejects_nan() {
        let err = PointCloud::new(
            vec![Point3::ORIGIN, Point3::new(0.0, f64::NAN, 0.0)],
            "sensor",
            0,
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFinitePoint { index: 1 });
        assert!(PointCloud::new(vec![Point3::new(f64::INFINITY, 0.0, 0.0)], "s", 0).is_err());
    }

    #[test]
    fn identity_transform_relabels_frame() {
        let cloud = sample_cloud();
        let mut tf = RigidTransform::identity("sensor");
        tf.parent_frame = "map".into();
        let out = transform_cloud(&cloud, &tf).unwrap();
        assert_eq!(out.points(), cloud.points());
        assert_eq!(out.frame_id(), "map");
        assert_eq!(out.stamp(), 42);
    }

    #[test]
    fn pure_translation() {
        let cloud = PointCloud::new(vec![Point3::ORIGIN], "sensor", 0).unwrap();
        let tf = RigidTransform::new([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0], "map", "sensor").unwrap();
        let out = transform_cloud(&cloud, &tf).unwrap();
        assert_eq!(out.points()[0], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn quarter_turn_yaw() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 0.0, 0.0)], "sensor", 0).unwrap();
        let h = FRAC_PI_4;
        let tf = RigidTransform::new([h.cos(), 0.0, 0.0, h.sin()], [0.0; 3], "map", "sensor").unwrap();
        let p = transform_cloud(&cloud, &tf).unwrap().points()[0];
        assert!((p.x - 0.0).abs() < 1e-12);
        assert!((p.y - 1.0).abs() < 1e-12);
        assert!(p.z.abs() < 1e-12);
    }

    #[test]
    fn transform_checks_frame() {
        let cloud = sample_cloud();
        let tf = RigidTransform::identity("lidar");
        assert!(matches!(
            transform_cloud(&cloud, &tf),
            Err(Error::FrameMismatch { .. })
        ));
    }

    #[test]
    fn compose_with_identity_and_inverse() {
        let t = RigidTransform::new([0.9, 0.1, -0.2, 0.3], [1.0, -2.0, 0.5], "map", "sensor").unwrap();
        let q = t.quaternion();
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);

        let same = compose(&t, &RigidTransform::identity("sensor")).unwrap();
        for (a, b) in same.quaternion().iter().zip(t.quaternion()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(same.translation(), t.translation());

        let id = compose(&t, &t.inverse()).unwrap();
        assert_eq!(id.parent_frame(), "map");
        assert_eq!(id.child_frame(), "map");
        let q = id.quaternion();
        // q and -q are the same rotation
        let s = q[0].signum();
        for (a, b) in q.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((s * a - b).abs() < 1e-9);
        }
        for c in id.translation() {
            assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn compose_detects_chain_break() {
        let a = RigidTransform::identity("a");
        let b = RigidTransform::identity("b");
        assert!(matches!(compose(&a, &b), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn zero_quaternion_rejected() {
        assert!(RigidTransform::new([0.0; 4], [0.0; 3], "a", "b").is_err());
    }

    #[test]
    fn plane_sign_convention() {
        let p = Plane::new(Point3::new(0.0, 0.0, -2.0), 4.0).unwrap();
        assert_eq!(p.normal(), Point3::new(0.0, 0.0, 1.0));
        assert_eq!(p.d(), -2.0);
        assert!(Plane::new(Point3::ORIGIN, 1.0).is_none());
        assert!(Plane::through(
            Point3::ORIGIN,
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(2.0, 2.0, 2.0)
        )
        .is_none());
    }

    #[test]
    fn detection_yaw_is_normalized() {
        let d = Detection::new(Point3::ORIGIN, [2.0, 1.0, 1.0], FRAC_PI_2 + 0.1, 5, 0).unwrap();
        assert!((d.yaw() - 0.1).abs() < 1e-12);
        assert_eq!(d.extents(), [1.0, 2.0, 1.0]);

        let d = Detection::new(Point3::ORIGIN, [2.0, 1.0, 1.0], -0.1, 5, 0).unwrap();
        assert!((d.yaw() - (FRAC_PI_2 - 0.1)).abs() < 1e-12);
        assert_eq!(d.extents(), [1.0, 2.0, 1.0]);

        let d = Detection::new(Point3::ORIGIN, [2.0, 1.0, 1.0], std::f64::consts::PI, 5, 0).unwrap();
        assert!(d.yaw().abs() < 1e-12);
        assert_eq!(d.extents(), [2.0, 1.0, 1.0]);
    }

    #[test]
    fn detection_footprint_survives_normalization() {
        let raw = [2.0, 0.5, 1.0];
        for yaw in [-3.0, -1.0, 0.3, 1.7, 2.9, 4.4, 7.0] {
            let d = Detection::new(Point3::new(1.0, 2.0, 0.0), raw, yaw, 1, 0).unwrap();
            let (s, c) = f64::sin_cos(yaw);
            // a point just inside the original rectangle along its long axis
            let (x, y) = (1.0 + 0.99 * c, 2.0 + 0.99 * s);
            assert!(d.footprint_contains(x, y), "yaw {yaw}");
            let (x, y) = (1.0 - 0.99 * s, 2.0 + 0.99 * c);
            assert!(!d.footprint_contains(x, y), "yaw {yaw}");
        }
    }

    #[test]
    fn detection_rejects_bad_extents() {
        assert!(Detection::new(Point3::ORIGIN, [0.0, 1.0, 1.0], 0.0, 1, 0).is_err());
        assert!(Detection::new(Point3::ORIGIN, [1.0, 1.0, 1.0], f64::NAN, 1, 0).is_err());
        assert!(Detection::new(Point3::ORIGIN, [1.0, 1.0, 1.0], 0.0, 0, 0).is_err());
    }
}
