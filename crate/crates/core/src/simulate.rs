//! Synthetic captures with known fruit geometry.
//!
//! Fruits are axis-aligned ellipsoids in the world frame and leaves are
//! planar quads. Each camera pixel casts one ray through its center; the
//! nearest hit decides both the depth sample and which fruit mask (if any)
//! the pixel belongs to. The world frame is the middle camera's frame, so
//! world y points down and semi-axis 1 is the vertical one.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::GroundTruthRecord;
use crate::geometry::{
    quantize_depth, CameraIntrinsics, DepthImage, Pixel, Point3, RigidTransform,
    DEFAULT_DEPTH_SCALE,
};
use crate::maskops::{BBox, BinaryMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FruitSpec {
    pub id: String,
    pub center_world: Point3,
    /// Semi-axes along world x, y (vertical), z in meters.
    pub semi_axes: [f64; 3],
}

impl FruitSpec {
    pub fn height_mm(&self) -> f64 {
        2000.0 * self.semi_axes[1]
    }

    pub fn width_mm(&self) -> f64 {
        2000.0 * self.semi_axes[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccluderSpec {
    pub corners: [Point3; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub camera_id: String,
    pub intrinsics: CameraIntrinsics,
    pub cam_to_world: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation at 1 m; grows with the square of depth.
    pub sigma_at_1m: f64,
}

fn default_scale() -> f64 {
    DEFAULT_DEPTH_SCALE
}

fn default_frame() -> String {
    "f0000".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub fruits: Vec<FruitSpec>,
    #[serde(default)]
    pub occluders: Vec<OccluderSpec>,
    pub rig: Vec<CameraSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub depth_scale: f64,
    #[serde(default = "default_frame")]
    pub frame_id: String,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if self.rig.is_empty() {
            return bad("rig has no cameras".into());
        }
        for f in &self.fruits {
            if !f.semi_axes.iter().all(|&a| a > 0.0 && a.is_finite()) {
                return bad(format!("fruit {} has a non-positive semi-axis", f.id));
            }
            if !f.center_world.iter().all(|c| c.is_finite()) {
                return bad(format!("fruit {} has a non-finite center", f.id));
            }
        }
        let mut ids: Vec<&str> = self.fruits.iter().map(|f| f.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate fruit id".into());
        }
        let mut cams: Vec<&str> = self.rig.iter().map(|c| c.camera_id.as_str()).collect();
        cams.sort_unstable();
        if cams.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate camera id".into());
        }
        for c in &self.rig {
            c.intrinsics
                .validate()
                .map_err(|e| SimError::InvalidSpec(format!("camera {}: {e}", c.camera_id)))?;
            c.cam_to_world
                .validate()
                .map_err(|e| SimError::InvalidSpec(format!("camera {}: {e}", c.camera_id)))?;
        }
        if !(self.noise.sigma_at_1m >= 0.0) {
            return bad("noise sigma must be non-negative".into());
        }
        if !(self.depth_scale > 0.0) {
            return bad("depth scale must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FruitView {
    pub fruit_id: String,
    pub mask: BinaryMask,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraCapture {
    pub camera_id: String,
    pub intrinsics: CameraIntrinsics,
    pub cam_to_world: RigidTransform,
    /// Depth after noise; this is what a sensor would report.
    pub depth: DepthImage,
    pub clean_depth: DepthImage,
    pub views: Vec<FruitView>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureBundle {
    pub frame_id: String,
    pub cameras: Vec<CameraCapture>,
    pub truth: Vec<GroundTruthRecord>,
}

struct Ray {
    origin: Vector3<f64>,
    // camera-frame z component of `dir` is 1, so the hit parameter is the depth
    dir: Vector3<f64>,
}

enum Shape {
    Ellipsoid { center: Vector3<f64>, inv_axes: Vector3<f64> },
    Quad { tris: [[Vector3<f64>; 3]; 2] },
}

struct Object {
    shape: Shape,
    bound_center: Vector3<f64>,
    bound_radius: f64,
}

impl Object {
    fn ellipsoid(f: &FruitSpec) -> Self {
        let a = Vector3::from(f.semi_axes);
        Object {
            shape: Shape::Ellipsoid { center: f.center_world.coords, inv_axes: a.map(|x| 1.0 / x) },
            bound_center: f.center_world.coords,
            bound_radius: a.max(),
        }
    }

    fn quad(q: &OccluderSpec) -> Self {
        let c: Vec<Vector3<f64>> = q.corners.iter().map(|p| p.coords).collect();
        let center = (c[0] + c[1] + c[2] + c[3]) / 4.0;
        let radius = c.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        Object {
            shape: Shape::Quad { tris: [[c[0], c[1], c[2]], [c[0], c[2], c[3]]] },
            bound_center: center,
            bound_radius: radius,
        }
    }

    fn hit(&self, ray: &Ray) -> Option<f64> {
        let oc = self.bound_center - ray.origin;
        let dd = ray.dir.norm_squared();
        let tca = oc.dot(&ray.dir) / dd;
        if oc.norm_squared() - tca * tca * dd > self.bound_radius * self.bound_radius {
            return None;
        }
        match &self.shape {
            Shape::Ellipsoid { center, inv_axes } => {
                let o = (ray.origin - center).component_mul(inv_axes);
                let d = ray.dir.component_mul(inv_axes);
                let a = d.norm_squared();
                let b = 2.0 * o.dot(&d);
                let c = o.norm_squared() - 1.0;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t0 = (-b - sq) / (2.0 * a);
                let t1 = (-b + sq) / (2.0 * a);
                if t0 > 0.0 {
                    Some(t0)
                } else if t1 > 0.0 {
                    Some(t1)
                } else {
                    None
                }
            }
            Shape::Quad { tris } => tris.iter().filter_map(|t| ray_triangle(ray, t)).reduce(f64::min),
        }
    }
}

// Möller–Trumbore
fn ray_triangle(ray: &Ray, tri: &[Vector3<f64>; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

const NO_HIT: u32 = u32::MAX;

/// Per-pixel nearest-object labels and clean depth for one camera.
fn cast_camera(cam: &CameraSpec, objects: &[Object], depth_scale: f64) -> (Vec<u32>, Vec<u16>) {
    let k = &cam.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let origin = *cam.cam_to_world.translation();
    let mut labels = vec![NO_HIT; w * h];
    let mut depth = vec![0u16; w * h];
    labels
        .par_chunks_mut(w)
        .zip(depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(v, (lab_row, dep_row))| {
            for u in 0..w {
                let (x, y) = k.normalized_ray(&Pixel::new(u as f64, v as f64));
                let ray = Ray { origin, dir: cam.cam_to_world.apply_vector(&Vector3::new(x, y, 1.0)) };
                let mut best: Option<(f64, usize)> = None;
                for (i, obj) in objects.iter().enumerate() {
                    if let Some(t) = obj.hit(&ray) {
                        if best.map_or(true, |(bt, _)| t < bt) {
                            best = Some((t, i));
                        }
                    }
                }
                if let Some((t, i)) = best {
                    let s = quantize_depth(t, depth_scale);
                    if s != 0 {
                        lab_row[u] = i as u32;
                        dep_row[u] = s;
                    }
                }
            }
        });
    (labels, depth)
}

fn mix_seed(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a simple combination
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Adds zero-mean Gaussian noise with `σ(z) = sigma_at_1m · z²` to every
/// valid sample and re-quantizes. Each image row draws from its own stream
/// derived from `(seed, row)`, so the result does not depend on scheduling.
pub fn add_depth_noise(depth: &DepthImage, sigma_at_1m: f64, seed: u64) -> DepthImage {
    if sigma_at_1m == 0.0 {
        return depth.clone();
    }
    let scale = depth.depth_scale();
    let w = depth.width() as usize;
    let mut out = depth.clone();
    out.data_mut().par_chunks_mut(w.max(1)).enumerate().for_each(|(row, samples)| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, row as u64));
        for s in samples.iter_mut().filter(|s| **s != 0) {
            let z = *s as f64 * scale;
            let sigma = sigma_at_1m * z * z;
            let noisy = z + Normal::new(0.0, sigma).expect("finite sigma").sample(&mut rng);
            *s = quantize_depth(noisy, scale).max(1);
        }
    });
    out
}

pub fn render_scene(spec: &SceneSpec) -> Result<CaptureBundle, SimError> {
    spec.validate()?;
    let n_fruits = spec.fruits.len();
    let objects: Vec<Object> = spec
        .fruits
        .iter()
        .map(Object::ellipsoid)
        .chain(spec.occluders.iter().map(Object::quad))
        .collect();

    let cameras = spec
        .rig
        .iter()
        .enumerate()
        .map(|(ci, cam)| {
            let k = &cam.intrinsics;
            let (labels, clean) = cast_camera(cam, &objects, spec.depth_scale);
            let clean = DepthImage::new(k.width, k.height, clean, spec.depth_scale).expect("sized buffer");
            let depth = add_depth_noise(&clean, spec.noise.sigma_at_1m, mix_seed(spec.seed, ci as u64));

            let mut per_fruit: Vec<Vec<usize>> = vec![Vec::new(); n_fruits];
            for (idx, &l) in labels.iter().enumerate() {
                if (l as usize) < n_fruits {
                    per_fruit[l as usize].push(idx);
                }
            }
            let views = per_fruit
                .into_iter()
                .enumerate()
                .filter(|(_, px)| !px.is_empty())
                .map(|(fi, px)| {
                    let mut data = vec![false; labels.len()];
                    for i in px {
                        data[i] = true;
                    }
                    let mask = BinaryMask::new(k.width, k.height, data).expect("sized buffer");
                    let bbox = mask.bounding_box().expect("nonempty mask");
                    FruitView { fruit_id: spec.fruits[fi].id.clone(), mask, bbox }
                })
                .collect();
            CameraCapture {
                camera_id: cam.camera_id.clone(),
                intrinsics: k.clone(),
                cam_to_world: cam.cam_to_world,
                depth,
                clean_depth: clean,
                views,
            }
        })
        .collect();

    let truth = spec
        .fruits
        .iter()
        .map(|f| GroundTruthRecord {
            fruit_id: f.id.clone(),
            height_mm: f.height_mm(),
            width_mm: f.width_mm(),
            center_world: Some(f.center_world),
        })
        .collect();
    Ok(CaptureBundle { frame_id: spec.frame_id.clone(), cameras, truth })
}

/// Color-stream intrinsics typical of a 1280x720 consumer stereo camera.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::pinhole(1280, 720, 910.0, 910.0, 640.0, 360.0)
}

/// Vertical spacing between cameras on the stand.
pub const RIG_CAMERA_SPACING_M: f64 = 0.45;
/// Distance from the middle camera to the aim point.
pub const RIG_TARGET_DISTANCE_M: f64 = 0.60;
/// Pitch between adjacent optical axes.
pub const RIG_PITCH_RAD: f64 = std::f64::consts::FRAC_PI_4;

/// Three cameras at heights 1.05, 0.60 and 0.15 m whose optical axes meet at a
/// point 0.60 m in front of the middle camera, 45° apart.
///
/// The middle camera is the world anchor (identity pose). The top camera sits
/// 0.45 m above it and is pitched down by 45°; for its axis to pass through
/// the aim point it is also moved 0.45 m closer to the plants, likewise the
/// bottom camera, pitched up.
pub fn paper_rig(intrinsics: &CameraIntrinsics) -> Vec<CameraSpec> {
    let pitched = |down: bool| {
        let dy = if down { -RIG_CAMERA_SPACING_M } else { RIG_CAMERA_SPACING_M };
        let dz = RIG_TARGET_DISTANCE_M - RIG_CAMERA_SPACING_M / RIG_PITCH_RAD.tan();
        // a negative rotation about +x turns +z toward +y (world down)
        let angle = if down { -RIG_PITCH_RAD } else { RIG_PITCH_RAD };
        RigidTransform::from_axis_angle(Vector3::x(), angle).with_translation(Vector3::new(0.0, dy, dz))
    };
    vec![
        CameraSpec { camera_id: "top".into(), intrinsics: intrinsics.clone(), cam_to_world: pitched(true) },
        CameraSpec {
            camera_id: "middle".into(),
            intrinsics: intrinsics.clone(),
            cam_to_world: RigidTransform::identity(),
        },
        CameraSpec { camera_id: "bottom".into(), intrinsics: intrinsics.clone(), cam_to_world: pitched(false) },
    ]
}

/// World point the rig's optical axes converge on.
pub fn rig_target() -> Point3 {
    Point3::new(0.0, 0.0, RIG_TARGET_DISTANCE_M)
}

// 12 heights with mean 39.4 mm and widths with mean 46.7 mm, paired so
// each fruit is wider than tall.
const LAB_HEIGHTS_MM: [f64; 12] = [35.0, 36.0, 37.0, 37.5, 38.5, 39.0, 39.5, 40.5, 41.0, 42.0, 43.0, 43.8];
const LAB_WIDTHS_MM: [f64; 12] = [42.0, 43.0, 44.0, 45.0, 45.9, 46.0, 47.0, 47.5, 48.5, 49.0, 50.5, 52.0];
// spreads sizes across the grid instead of sorting them by position
const LAB_SLOT_ORDER: [usize; 12] = [5, 10, 1, 7, 3, 11, 0, 8, 6, 2, 9, 4];
// Tightest pitch that keeps every fruit fully visible: columns just clear
// the widest fruit, rows stay apart in the 45° views (75 mm · cos 45° > 52 mm).
const LAB_COLUMNS_M: [f64; 4] = [-0.0825, -0.0275, 0.0275, 0.0825];
const LAB_ROWS_M: [f64; 3] = [-0.075, 0.0, 0.075];
const LAB_DEPTH_JITTER_M: [f64; 12] = [0.0, 0.008, -0.006, 0.004, -0.01, 0.002, 0.006, -0.004, 0.01, -0.008, 0.0, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FruitShape {
    /// Spheres with the lab width list as diameters.
    Sphere,
    /// Oblate ellipsoids: vertical axis from the height list.
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabSceneOptions {
    pub shape: FruitShape,
    pub sigma_at_1m: f64,
    /// Leaf coverage range for each fruit's bottom-camera view; `None` for no leaves.
    pub bottom_occlusion: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for LabSceneOptions {
    fn default() -> Self {
        Self { shape: FruitShape::Ellipsoid, sigma_at_1m: 0.0, bottom_occlusion: None, seed: 0 }
    }
}

/// Twelve fruits on a 4x3 grid around the rig's aim point (55 mm column and
/// 75 mm row pitch), seen by [`paper_rig`].
pub fn lab_scene(opts: &LabSceneOptions) -> SceneSpec {
    let rig = paper_rig(&default_intrinsics());
    let mut fruits = Vec::with_capacity(12);
    for (slot, &size_idx) in LAB_SLOT_ORDER.iter().enumerate() {
        let (row, col) = (slot / 4, slot % 4);
        let w = LAB_WIDTHS_MM[size_idx] / 2000.0;
        let h = match opts.shape {
            FruitShape::Sphere => w,
            FruitShape::Ellipsoid => LAB_HEIGHTS_MM[size_idx] / 2000.0,
        };
        let target = rig_target();
        fruits.push(FruitSpec {
            id: format!("fruit{:02}", slot + 1),
            center_world: Point3::new(
                target.x + LAB_COLUMNS_M[col],
                target.y + LAB_ROWS_M[row],
                target.z + LAB_DEPTH_JITTER_M[slot],
            ),
            semi_axes: [w, h, w],
        });
    }
    let occluders = match opts.bottom_occlusion {
        Some(range) => {
            let bottom = rig.iter().find(|c| c.camera_id == "bottom").expect("bottom camera");
            leaves_for_camera(bottom, &fruits, range, opts.seed)
        }
        None => Vec::new(),
    };
    SceneSpec {
        fruits,
        occluders,
        rig,
        noise: NoiseSpec { sigma_at_1m: opts.sigma_at_1m },
        seed: opts.seed,
        depth_scale: DEFAULT_DEPTH_SCALE,
        frame_id: default_frame(),
    }
}

/// Fraction of a unit disc's area lying beyond a chord at distance `h` from
/// the center (`h` in `[-1, 1]`).
fn segment_fraction(h: f64) -> f64 {
    let h = h.clamp(-1.0, 1.0);
    (h.acos() - h * (1.0 - h * h).sqrt()) / std::f64::consts::PI
}

/// Chord offset whose far segment covers `fraction` of a unit disc.
fn chord_offset(fraction: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if segment_fraction(mid) > fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Leaf depth as a fraction of the camera-to-fruit depth.
const LEAF_DEPTH_FRACTION: f64 = 0.4;

/// Image-space bounding box `[u_min, u_max, v_min, v_max]` of an ellipsoid's
/// silhouette, from the tangent lines of its image conic. `None` when the
/// camera is inside or the silhouette is unbounded.
pub fn projected_extent(cam: &CameraSpec, fruit: &FruitSpec) -> Option<[f64; 4]> {
    let k = &cam.intrinsics;
    let kmat = Matrix3::new(k.fx, 0.0, k.ppx, 0.0, k.fy, k.ppy, 0.0, 0.0, 1.0);
    let w2c = cam.cam_to_world.invert();
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(w2c.rotation());
    rt.set_column(3, w2c.translation());
    let p = kmat * rt;
    // dual quadric of the ellipsoid: translate diag(a², b², c², -1)
    let [a, b, c] = fruit.semi_axes;
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&fruit.center_world.coords);
    let q = t * Matrix4::from_diagonal(&Vector4::new(a * a, b * b, c * c, -1.0)) * t.transpose();
    let conic = p * q * p.transpose();
    let bounds = |ii: usize, i3: usize| {
        let (cii, ci3, c33) = (conic[(ii, ii)], conic[(ii, i3)], conic[(2, 2)]);
        let disc = ci3 * ci3 - cii * c33;
        // c33 is minus the squared distance margin; it is negative exactly
        // when the camera center lies outside the ellipsoid
        if !(c33 < 0.0) || disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        Some(((ci3 + sq) / c33, (ci3 - sq) / c33))
    };
    let (u0, u1) = bounds(0, 2)?;
    let (v0, v1) = bounds(1, 2)?;
    Some([u0, u1, v0, v1])
}

/// One leaf per fruit, placed between `cam` and the fruit so it hides a
/// random side of the fruit's silhouette. The covered fraction is drawn from
/// `coverage`, treating the silhouette as an axis-aligned ellipse.
pub fn leaves_for_camera(
    cam: &CameraSpec,
    fruits: &[FruitSpec],
    coverage: (f64, f64),
    seed: u64,
) -> Vec<OccluderSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x1eaf));
    let k = &cam.intrinsics;
    let world_to_cam = cam.cam_to_world.invert();
    let mut leaves = Vec::with_capacity(fruits.len());
    for f in fruits {
        let fraction = rng.gen_range(coverage.0..=coverage.1);
        let side = rng.gen_range(0..4u8);
        let pc = world_to_cam.apply(&f.center_world);
        let Some([u0, u1, v0, v1]) = projected_extent(cam, f) else { continue };
        let (uc, vc) = ((u0 + u1) / 2.0, (v0 + v1) / 2.0);
        let (ru, rv) = ((u1 - u0) / 2.0, (v1 - v0) / 2.0);
        let (r_along, r_across) = if side < 2 { (rv, ru) } else { (ru, rv) };
        let h = chord_offset(fraction);
        // rectangle in (along, across) units of the silhouette half-extents;
        // small overshoot past the silhouette so the cut edge alone matters
        let corners_2d = [(h, -1.02), (1.1, -1.02), (1.1, 1.02), (h, 1.02)];
        let z = LEAF_DEPTH_FRACTION * pc.z;
        let corners = corners_2d.map(|(along, across)| {
            let (along, across) = (along * r_along, across * r_across);
            let (du, dv) = match side {
                0 => (across, -along), // top
                1 => (across, along),  // bottom
                2 => (-along, across), // left
                _ => (along, across),  // right
            };
            let (u, v) = (uc + du, vc + dv);
            let p = Point3::new((u - k.ppx) / k.fx * z, (v - k.ppy) / k.fy * z, z);
            cam.cam_to_world.apply(&p)
        });
        leaves.push(OccluderSpec { corners });
    }
    leaves
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cam() -> CameraSpec {
        CameraSpec {
            camera_id: "cam".into(),
            intrinsics: CameraIntrinsics::pinhole(160, 120, 150.0, 150.0, 80.0, 60.0),
            cam_to_world: RigidTransform::identity(),
        }
    }

    fn sphere(id: &str, x: f64, z: f64, r: f64) -> FruitSpec {
        FruitSpec { id: id.into(), center_world: Point3::new(x, 0.0, z), semi_axes: [r, r, r] }
    }

    fn scene(fruits: Vec<FruitSpec>) -> SceneSpec {
        SceneSpec {
            fruits,
            occluders: vec![],
            rig: vec![small_cam()],
            noise: NoiseSpec::default(),
            seed: 1,
            depth_scale: 0.001,
            frame_id: "f0000".into(),
        }
    }

    #[test]
    fn empty_scene_renders_nothing() {
        let b = render_scene(&scene(vec![])).unwrap();
        assert!(b.cameras[0].views.is_empty());
        assert!(b.cameras[0].depth.data().iter().all(|&s| s == 0));
        assert!(b.truth.is_empty());
    }

    #[test]
    fn zero_semi_axis_is_invalid() {
        let mut f = sphere("a", 0.0, 0.6, 0.02);
        f.semi_axes[1] = 0.0;
        assert!(matches!(render_scene(&scene(vec![f])), Err(SimError::InvalidSpec(_))));
        let mut s = scene(vec![]);
        s.rig.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn on_axis_sphere_depth() {
        let b = render_scene(&scene(vec![sphere("a", 0.0, 0.6, 0.02)])).unwrap();
        let cam = &b.cameras[0];
        assert_eq!(cam.views.len(), 1);
        // front surface at the principal point
        assert_eq!(cam.clean_depth.sample(80, 60), 580);
        let m = &cam.views[0].mask;
        assert!(m.get(80, 60));
        assert_eq!(b.truth[0].height_mm, 40.0);
    }

    #[test]
    fn nearer_fruit_hides_farther_one() {
        let b = render_scene(&scene(vec![sphere("far", 0.0, 0.8, 0.06), sphere("near", 0.0, 0.5, 0.02)])).unwrap();
        let views = &b.cameras[0].views;
        let far = views.iter().find(|v| v.fruit_id == "far").unwrap();
        let near = views.iter().find(|v| v.fruit_id == "near").unwrap();
        assert!(!far.mask.get(80, 60) && near.mask.get(80, 60));
        assert!(far.mask.pixels().all(|(u, v)| !near.mask.get(u, v)));
    }

    #[test]
    fn noise_free_and_deterministic() {
        let d = DepthImage::new(4, 2, vec![0, 600, 700, 800, 900, 1000, 0, 1200], 0.001).unwrap();
        assert_eq!(add_depth_noise(&d, 0.0, 3), d);
        let a = add_depth_noise(&d, 0.01, 3);
        assert_eq!(a, add_depth_noise(&d, 0.01, 3));
        assert_eq!((a.sample(0, 0), a.sample(2, 1)), (0, 0));
        assert_ne!(a, add_depth_noise(&d, 0.01, 4));
    }

    #[test]
    fn chord_offsets() {
        assert!(chord_offset(0.5).abs() < 1e-12);
        assert!((segment_fraction(chord_offset(0.3)) - 0.3).abs() < 1e-12);
        assert!(chord_offset(0.2) > chord_offset(0.4));
    }

    #[test]
    fn projected_extent_matches_render() {
        let f = FruitSpec { id: "e".into(), center_world: Point3::new(0.02, -0.01, 0.5), semi_axes: [0.02, 0.015, 0.025] };
        let mut cam = small_cam();
        cam.cam_to_world = RigidTransform::from_axis_angle(Vector3::x(), 0.3);
        let b = render_scene(&SceneSpec { rig: vec![cam.clone()], ..scene(vec![f.clone()]) }).unwrap();
        let bb = b.cameras[0].views[0].bbox;
        let [u0, u1, v0, v1] = projected_extent(&cam, &f).unwrap();
        // pixel centers inside the silhouette lie within half a pixel of its bounds
        assert!((bb.x as f64 - u0).abs() <= 1.0 && ((bb.x + bb.w - 1) as f64 - u1).abs() <= 1.0);
        assert!((bb.y as f64 - v0).abs() <= 1.0 && ((bb.y + bb.h - 1) as f64 - v1).abs() <= 1.0);
    }

    #[test]
    fn rig_geometry() {
        let rig = paper_rig(&default_intrinsics());
        assert_eq!(rig[1].cam_to_world, RigidTransform::identity());
        let axis = |c: &CameraSpec| c.cam_to_world.apply_vector(&Vector3::z());
        let angle = axis(&rig[0]).angle(&axis(&rig[1])).to_degrees();
        assert!((angle - 45.0).abs() < 0.1);
        let heights: Vec<f64> = rig.iter().map(|c| 0.60 - c.cam_to_world.translation().y).collect();
        assert!((heights[0] - 1.05).abs() < 1e-12 && (heights[2] - 0.15).abs() < 1e-12);
        for c in &rig {
            let o = c.cam_to_world.translation();
            let d = axis(c);
            let to_target = rig_target().coords - o;
            let miss = (to_target - d * to_target.dot(&d)).norm();
            assert!(miss < 1e-3, "{} misses aim point by {miss}", c.camera_id);
        }
    }
}
