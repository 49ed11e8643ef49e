//! Rigid transforms, the pinhole camera model, depth alignment and the
//! extrinsic chain solver.
//!
//! Conventions: camera frame has x right, y down, z forward. Pixel
//! coordinates have their origin at the top-left of the image and integer
//! coordinates address pixel centers, so the image rectangle spans
//! `[-0.5, width - 0.5] x [-0.5, height - 0.5]`.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;

/// Maximum tolerated deviation from orthonormality for an ingested rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;
/// Drift beyond which a composed rotation is projected back onto SO(3).
pub const REPAIR_THRESHOLD: f64 = 1e-9;

const UNDISTORT_MAX_ITERATIONS: usize = 10;
const UNDISTORT_TOLERANCE_PX: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid depth {0} m")]
    InvalidDepth(f64),
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: u32, height: u32 },
    #[error("point behind camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid depth image: {0}")]
    InvalidDepthImage(String),
}

/// Rotation plus translation, equivalent to a 4x4 homogeneous matrix with
/// bottom row `(0, 0, 0, 1)`.
///
/// Deserialization does not validate; use [`RigidTransform::validate`] on
/// ingested data. [`RigidTransform::new`] validates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TransformRepr", into = "TransformRepr")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl From<TransformRepr> for RigidTransform {
    fn from(r: TransformRepr) -> Self {
        let m = r.rotation;
        RigidTransform::from_parts_unchecked(
            Matrix3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ),
            Vector3::from(r.translation),
        )
    }
}

impl From<RigidTransform> for TransformRepr {
    fn from(t: RigidTransform) -> Self {
        let r = t.rotation;
        TransformRepr {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let t = Self::from_parts_unchecked(rotation, translation);
        t.validate()?;
        Ok(t)
    }

    /// Builds a transform without checking the rotation. Intended for
    /// ingesting external data that is validated later.
    pub fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::from_parts_unchecked(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::from_parts_unchecked(Matrix3::identity(), Vector3::new(x, y, z))
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        let rot = nalgebra::Rotation3::from_axis_angle(&axis, angle);
        Self::from_parts_unchecked(*rot.matrix(), Vector3::zeros())
    }

    pub fn with_translation(mut self, translation: Vector3<f64>) -> Self {
        self.translation = translation;
        self
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Largest violation of `RᵀR = I` and `det R = 1`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let gram_err = gram.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        gram_err.max((self.rotation.determinant() - 1.0).abs())
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.rotation.iter().chain(self.translation.iter()).all(|x| x.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite entry".into()));
        }
        let err = self.orthonormality_error();
        if err > ORTHONORMAL_TOLERANCE {
            return Err(GeometryError::InvalidPose(format!(
                "rotation is not orthonormal (error {err:.3e})"
            )));
        }
        Ok(())
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut out = RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        };
        if out.orthonormality_error() > REPAIR_THRESHOLD {
            out.rotation = nearest_rotation(&out.rotation);
        }
        out
    }

    pub fn invert(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }
}

/// Closest rotation matrix in the Frobenius sense (polar decomposition).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = u * d * v_t;
    }
    r
}

/// Transform `T` mapping camera `a`'s frame into camera `b`'s frame from one
/// simultaneous observation of the same board, i.e. `T · board_in_a = board_in_b`.
pub fn solve_camera_chain(
    board_in_a: &RigidTransform,
    board_in_b: &RigidTransform,
) -> Result<RigidTransform, GeometryError> {
    board_in_a.validate()?;
    board_in_b.validate()?;
    Ok(board_in_b.compose(&board_in_a.invert()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Pinhole intrinsics with optional Brown–Conrady distortion
/// `[k1, k2, p1, p2, k3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub ppx: f64,
    pub ppy: f64,
    #[serde(default)]
    pub distortion: Option<[f64; 5]>,
}

impl CameraIntrinsics {
    pub fn pinhole(width: u32, height: u32, fx: f64, fy: f64, ppx: f64, ppy: f64) -> Self {
        Self { width, height, fx, fy, ppx, ppy, distortion: None }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidIntrinsics(msg.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("zero image dimension");
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if !(0.0..self.width as f64).contains(&self.ppx)
            || !(0.0..self.height as f64).contains(&self.ppy)
        {
            return bad("principal point outside image");
        }
        if let Some(d) = &self.distortion {
            if d.iter().any(|c| !c.is_finite()) {
                return bad("non-finite distortion coefficient");
            }
        }
        Ok(())
    }

    pub fn contains(&self, px: &Pixel) -> bool {
        px.u >= -0.5
            && px.v >= -0.5
            && px.u <= self.width as f64 - 0.5
            && px.v <= self.height as f64 - 0.5
    }

    fn has_distortion(&self) -> bool {
        self.distortion.is_some_and(|d| d.iter().any(|&c| c != 0.0))
    }

    /// Normalized image coordinates of the ray through `px`.
    pub fn normalized_ray(&self, px: &Pixel) -> (f64, f64) {
        let xd = (px.u - self.ppx) / self.fx;
        let yd = (px.v - self.ppy) / self.fy;
        match self.distortion {
            Some(coeffs) if self.has_distortion() => undistort(&coeffs, xd, yd, self.fx.max(self.fy)),
            _ => (xd, yd),
        }
    }
}

fn distort(c: &[f64; 5], x: f64, y: f64) -> (f64, f64) {
    let [k1, k2, p1, p2, k3] = *c;
    let r2 = x * x + y * y;
    let radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    (
        x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
        y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y,
    )
}

// Newton iteration on the forward model; `scale_px` converts the normalized
// residual into pixels for the stopping test.
fn undistort(c: &[f64; 5], xd: f64, yd: f64, scale_px: f64) -> (f64, f64) {
    let [k1, k2, p1, p2, k3] = *c;
    let (mut x, mut y) = (xd, yd);
    for _ in 0..UNDISTORT_MAX_ITERATIONS {
        let (fx, fy) = distort(c, x, y);
        let (ex, ey) = (fx - xd, fy - yd);
        if ex.abs().max(ey.abs()) * scale_px < UNDISTORT_TOLERANCE_PX {
            break;
        }
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
        let d_radial = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2);
        let j11 = radial + 2.0 * x * x * d_radial + 2.0 * p1 * y + 6.0 * p2 * x;
        let j12 = 2.0 * x * y * d_radial + 2.0 * p1 * x + 2.0 * p2 * y;
        let j21 = j12;
        let j22 = radial + 2.0 * y * y * d_radial + 6.0 * p1 * y + 2.0 * p2 * x;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < f64::EPSILON {
            break;
        }
        x -= (j22 * ex - j12 * ey) / det;
        y -= (-j21 * ex + j11 * ey) / det;
    }
    (x, y)
}

/// Pixel plus metric depth (along the optical axis) to a camera-frame point.
pub fn deproject(k: &CameraIntrinsics, px: &Pixel, depth_m: f64) -> Result<Point3, GeometryError> {
    if !(depth_m > 0.0) || !depth_m.is_finite() {
        return Err(GeometryError::InvalidDepth(depth_m));
    }
    if !k.contains(px) || !px.u.is_finite() || !px.v.is_finite() {
        return Err(GeometryError::OutOfBounds {
            u: px.u,
            v: px.v,
            width: k.width,
            height: k.height,
        });
    }
    let (x, y) = k.normalized_ray(px);
    Ok(Point3::new(x * depth_m, y * depth_m, depth_m))
}

/// Camera-frame point to pixel coordinates. The result may lie outside the image.
pub fn project(k: &CameraIntrinsics, p: &Point3) -> Result<Pixel, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera(p.z));
    }
    let (mut x, mut y) = (p.x / p.z, p.y / p.z);
    if let Some(c) = k.distortion.filter(|_| k.has_distortion()) {
        (x, y) = distort(&c, x, y);
    }
    Ok(Pixel::new(k.fx * x + k.ppx, k.fy * y + k.ppy))
}

/// 16-bit depth buffer; a sample of 0 means "no depth".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    data: Vec<u16>,
    depth_scale: f64,
}

pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

impl DepthImage {
    pub fn new(width: u32, height: u32, data: Vec<u16>, depth_scale: f64) -> Result<Self, GeometryError> {
        if data.len() != width as usize * height as usize {
            return Err(GeometryError::InvalidDepthImage(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if !(depth_scale > 0.0) || !depth_scale.is_finite() {
            return Err(GeometryError::InvalidDepthImage(format!("depth scale {depth_scale}")));
        }
        Ok(Self { width, height, data, depth_scale })
    }

    pub fn zeros(width: u32, height: u32, depth_scale: f64) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
            depth_scale,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depth_scale(&self) -> f64 {
        self.depth_scale
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    pub fn sample(&self, u: u32, v: u32) -> u16 {
        self.data[v as usize * self.width as usize + u as usize]
    }

    /// Depth in meters, `None` for missing samples or out-of-range pixels.
    pub fn meters(&self, u: u32, v: u32) -> Option<f64> {
        if u >= self.width || v >= self.height {
            return None;
        }
        match self.sample(u, v) {
            0 => None,
            s => Some(s as f64 * self.depth_scale),
        }
    }

    /// Nearest representable sample for `meters`, or 0 if out of range.
    pub fn quantize(&self, meters: f64) -> u16 {
        quantize_depth(meters, self.depth_scale)
    }
}

pub fn quantize_depth(meters: f64, depth_scale: f64) -> u16 {
    let q = (meters / depth_scale).round();
    if q >= 1.0 && q <= u16::MAX as f64 {
        q as u16
    } else {
        0
    }
}

/// Reprojects a depth image into the color camera's pixel grid.
///
/// Every valid sample is deprojected, moved into the color frame and
/// splatted to its nearest color pixel; collisions keep the nearest depth.
pub fn align_depth_to_color(
    depth: &DepthImage,
    depth_k: &CameraIntrinsics,
    color_k: &CameraIntrinsics,
    depth_to_color: &RigidTransform,
) -> DepthImage {
    let mut out = DepthImage::zeros(color_k.width, color_k.height, depth.depth_scale);
    for v in 0..depth.height.min(depth_k.height) {
        for u in 0..depth.width.min(depth_k.width) {
            let Some(z) = depth.meters(u, v) else { continue };
            let Ok(p) = deproject(depth_k, &Pixel::new(u as f64, v as f64), z) else { continue };
            let q = depth_to_color.apply(&p);
            let Ok(px) = project(color_k, &q) else { continue };
            let (cu, cv) = (px.u.round(), px.v.round());
            if cu < 0.0 || cv < 0.0 || cu >= color_k.width as f64 || cv >= color_k.height as f64 {
                continue;
            }
            let sample = out.quantize(q.z);
            if sample == 0 {
                continue;
            }
            let idx = cv as usize * color_k.width as usize + cu as usize;
            let slot = &mut out.data[idx];
            if *slot == 0 || sample < *slot {
                *slot = sample;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn k_600() -> CameraIntrinsics {
        CameraIntrinsics::pinhole(1280, 720, 600.0, 600.0, 640.0, 360.0)
    }

    #[test]
    fn compose_identity_and_translations() {
        let t = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 0.7)
            .with_translation(Vector3::new(0.1, -0.2, 0.3));
        assert_eq!(t.compose(&RigidTransform::identity()), t);
        let c = RigidTransform::from_translation(1.0, 0.0, 0.0)
            .compose(&RigidTransform::from_translation(0.0, 2.0, 0.0));
        assert_eq!(c, RigidTransform::from_translation(1.0, 2.0, 0.0));
        let id = t.compose(&t.invert());
        assert!((id.to_matrix() - Matrix4::identity()).amax() < 1e-9);
    }

    #[test]
    fn invert_cases() {
        assert_eq!(RigidTransform::identity().invert(), RigidTransform::identity());
        assert_eq!(
            RigidTransform::from_translation(1.0, 2.0, 3.0).invert(),
            RigidTransform::from_translation(-1.0, -2.0, -3.0)
        );
    }

    #[test]
    fn apply_examples() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(RigidTransform::identity().apply(&p), p);
        let q = RigidTransform::from_translation(0.0, 0.0, -0.6).apply(&Point3::new(0.0, 0.0, 0.623));
        assert_relative_eq!(q.z, 0.023, epsilon = 1e-12);
        let r = RigidTransform::from_axis_angle(Vector3::z(), FRAC_PI_2).apply(&Point3::new(1.0, 0.0, 0.0));
        assert!((r - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn bottom_row_is_exact() {
        let t = RigidTransform::from_axis_angle(Vector3::new(0.3, 1.0, -0.2), 1.1)
            .with_translation(Vector3::new(5.0, 6.0, 7.0));
        let m = t.to_matrix();
        assert_eq!([m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn chain_with_identity_board_returns_other_pose() {
        let x = RigidTransform::from_axis_angle(Vector3::y(), 0.4).with_translation(Vector3::new(0.0, 0.1, 0.6));
        let t = solve_camera_chain(&RigidTransform::identity(), &x).unwrap();
        assert!((t.to_matrix() - x.to_matrix()).amax() < 1e-15);
    }

    #[test]
    fn chain_rejects_scaled_rotation() {
        let bad = RigidTransform::from_parts_unchecked(Matrix3::identity() * 1.1, Vector3::zeros());
        assert!(matches!(
            solve_camera_chain(&bad, &RigidTransform::identity()),
            Err(GeometryError::InvalidPose(_))
        ));
        assert!(RigidTransform::new(Matrix3::identity() * 1.1, Vector3::zeros()).is_err());
    }

    #[test]
    fn deproject_examples() {
        let p = deproject(&k_600(), &Pixel::new(640.0, 360.0), 0.5).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 0.5));
        let k = CameraIntrinsics::pinhole(1280, 720, 500.0, 500.0, 640.0, 360.0);
        let p = deproject(&k, &Pixel::new(1140.0, 360.0), 1.0).unwrap();
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-15);
        assert_eq!(p.y, 0.0);
        assert!(matches!(
            deproject(&k, &Pixel::new(10.0, 10.0), 0.0),
            Err(GeometryError::InvalidDepth(_))
        ));
        assert!(matches!(
            deproject(&k, &Pixel::new(1300.0, 10.0), 1.0),
            Err(GeometryError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn project_examples() {
        let px = project(&k_600(), &Point3::new(0.0, 0.0, 0.5)).unwrap();
        assert_eq!(px, Pixel::new(640.0, 360.0));
        assert!(matches!(
            project(&k_600(), &Point3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::BehindCamera(_))
        ));
    }

    #[test]
    fn distorted_roundtrip() {
        let mut k = k_600();
        k.distortion = Some([0.12, -0.25, 0.001, -0.0015, 0.09]);
        for &(u, v) in &[(0.0, 0.0), (1279.0, 719.0), (300.5, 600.25), (640.0, 360.0)] {
            let p = deproject(&k, &Pixel::new(u, v), 1.3).unwrap();
            let back = project(&k, &p).unwrap();
            assert!((back.u - u).abs() < 1e-6 && (back.v - v).abs() < 1e-6, "{u},{v} -> {back:?}");
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(k_600().validate().is_ok());
        let mut k = k_600();
        k.fx = 0.0;
        assert!(k.validate().is_err());
        let mut k = k_600();
        k.ppx = 1280.0;
        assert!(k.validate().is_err());
    }

    #[test]
    fn align_identity_is_noop() {
        let k = CameraIntrinsics::pinhole(64, 48, 50.0, 50.0, 32.0, 24.0);
        let data: Vec<u16> = (0..64 * 48).map(|i| if i % 7 == 0 { 0 } else { 500 + (i % 300) as u16 }).collect();
        let depth = DepthImage::new(64, 48, data, 0.001).unwrap();
        let out = align_depth_to_color(&depth, &k, &k, &RigidTransform::identity());
        assert_eq!(out, depth);
    }

    #[test]
    fn align_shifts_by_baseline() {
        let k = CameraIntrinsics::pinhole(1280, 720, 500.0, 500.0, 640.0, 360.0);
        let mut depth = DepthImage::zeros(1280, 720, 0.001);
        depth.data_mut()[360 * 1280 + 640] = 1000;
        let out = align_depth_to_color(&depth, &k, &k, &RigidTransform::from_translation(0.05, 0.0, 0.0));
        let hits: Vec<_> = out.data().iter().enumerate().filter(|(_, &s)| s != 0).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0], (360 * 1280 + 665, &1000));
    }

    #[test]
    fn align_zero_image_stays_zero() {
        let k = CameraIntrinsics::pinhole(32, 32, 30.0, 30.0, 16.0, 16.0);
        let out = align_depth_to_color(&DepthImage::zeros(32, 32, 0.001), &k, &k, &RigidTransform::identity());
        assert!(out.data().iter().all(|&s| s == 0));
    }

    #[test]
    fn nearest_depth_wins_on_collision() {
        // Two depth pixels that land on the same color pixel after a large downscale.
        let dk = CameraIntrinsics::pinhole(4, 1, 100.0, 100.0, 1.5, 0.0);
        let ck = CameraIntrinsics::pinhole(1, 1, 1.0, 1.0, 0.0, 0.0);
        let depth = DepthImage::new(4, 1, vec![0, 800, 700, 0], 0.001).unwrap();
        let out = align_depth_to_color(&depth, &dk, &ck, &RigidTransform::identity());
        assert_eq!(out.data(), &[700]);
    }

    #[test]
    fn transform_json_shape() {
        let t = RigidTransform::from_translation(1.0, 2.0, 3.0);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"rotation":[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]],"translation":[1.0,2.0,3.0]}"#);
        let back: RigidTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn intrinsics_json_null_distortion() {
        let k: CameraIntrinsics = serde_json::from_str(
            r#"{"width":1280,"height":720,"fx":910.0,"fy":910.0,"ppx":640.0,"ppy":360.0,"distortion":null}"#,
        )
        .unwrap();
        assert_eq!(k.distortion, None);
    }
}
