//! Per-view fruit metrics: metric height and width from four extreme points
//! deprojected at a shared edge depth, algebraic circle fit and fill ratio.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{deproject, CameraIntrinsics, DepthImage, GeometryError, Pixel, Point3};
use crate::maskops::{
    bbox_extreme_points, extract_edges, extreme_points, median_edge_depth, BBox, BinaryMask,
    EdgeSet, ExtremePoints, MaskError, DEFAULT_INVALID_DEPTH_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SizingError {
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degenerate circle: {0}")]
    DegenerateCircle(String),
    #[error("fitted circle covers no pixel centers")]
    ZeroArea,
}

/// Circle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedCircle {
    pub cu: f64,
    pub cv: f64,
    pub r_px: f64,
}

impl FittedCircle {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        let (du, dv) = (u - self.cu, v - self.cv);
        du * du + dv * dv <= self.r_px * self.r_px
    }
}

/// Ratio of minor to major scatter below which a point set is treated as
/// collinear.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-9;
const REFINE_MAX_ITERATIONS: usize = 20;

/// Kåsa algebraic fit: minimizes `Σ (u² + v² + A·u + B·v + C)²`.
///
/// Coordinates are centered on their mean before solving, which keeps the
/// normal equations well conditioned and makes the fit translation-equivariant.
pub fn fit_circle_points(points: &[Pixel]) -> Result<FittedCircle, SizingError> {
    if points.len() < 3 {
        return Err(SizingError::DegenerateCircle(format!("{} points", points.len())));
    }
    let n = points.len() as f64;
    let (mu, mv) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.u, b + p.v));
    let (mu, mv) = (mu / n, mv / n);

    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p.u - mu, p.v - mv);
        let z = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxz += x * z;
        syz += y * z;
        sz += z;
    }
    let scatter = Matrix2::new(sxx, sxy, sxy, syy);
    let eig = scatter.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo.max(0.0) / hi <= COLLINEARITY_TOLERANCE {
        return Err(SizingError::DegenerateCircle("points are collinear".into()));
    }
    let ab = scatter
        .lu()
        .solve(&Vector2::new(-sxz, -syz))
        .ok_or_else(|| SizingError::DegenerateCircle("singular normal equations".into()))?;
    let c = -sz / n;
    let (a, b) = (ab.x, ab.y);
    let r2 = (a * a + b * b) / 4.0 - c;
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(SizingError::DegenerateCircle(format!("radius² = {r2}")));
    }
    Ok(FittedCircle { cu: mu - a / 2.0, cv: mv - b / 2.0, r_px: r2.sqrt() })
}

pub fn fit_circle(edges: &EdgeSet) -> Result<FittedCircle, SizingError> {
    fit_circle_points(&edges.points())
}

/// Gauss–Newton refinement of `init` on geometric (radial) residuals.
pub fn refine_circle(points: &[Pixel], init: FittedCircle) -> FittedCircle {
    let mut c = init;
    for _ in 0..REFINE_MAX_ITERATIONS {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for p in points {
            let (dx, dy) = (p.u - c.cu, p.v - c.cv);
            let d = (dx * dx + dy * dy).sqrt();
            if d < f64::EPSILON {
                continue;
            }
            let j = Vector3::new(-dx / d, -dy / d, -1.0);
            let r = d - c.r_px;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let Some(step) = jtj.lu().solve(&(-jtr)) else { break };
        let next = FittedCircle { cu: c.cu + step.x, cv: c.cv + step.y, r_px: c.r_px + step.z };
        if !(next.r_px > 0.0) || !next.cu.is_finite() || !next.cv.is_finite() {
            break;
        }
        c = next;
        if step.amax() < 1e-12 {
            break;
        }
    }
    c
}

/// Fraction of the circle's pixel-center lattice points covered by the mask.
///
/// The denominator counts every integer lattice point inside the circle,
/// including those outside the image, so a fruit clipped by the border scores
/// lower just as an occluded one does.
pub fn fill_ratio(mask: &BinaryMask, circle: &FittedCircle) -> Result<f64, SizingError> {
    let (u0, u1) = ((circle.cu - circle.r_px).ceil() as i64, (circle.cu + circle.r_px).floor() as i64);
    let (v0, v1) = ((circle.cv - circle.r_px).ceil() as i64, (circle.cv + circle.r_px).floor() as i64);
    let (mut inside, mut covered) = (0u64, 0u64);
    for v in v0..=v1 {
        for u in u0..=u1 {
            if circle.contains(u as f64, v as f64) {
                inside += 1;
                if mask.get_signed(u, v) {
                    covered += 1;
                }
            }
        }
    }
    if inside == 0 {
        return Err(SizingError::ZeroArea);
    }
    Ok((covered as f64 / inside as f64).clamp(0.0, 1.0))
}

/// Euclidean distance between two points, in millimeters.
pub fn distance_mm(a: &Point3, b: &Point3) -> f64 {
    (a - b).norm() * 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeSource {
    #[default]
    Mask,
    Bbox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    /// All four extreme points share the median edge depth.
    #[default]
    Shared,
    /// Each extreme point uses its own sample, falling back to the shared depth.
    PerPixel,
}

/// Where on an extreme pixel the measurement endpoint sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtentConvention {
    /// Outer boundary of the extreme pixel (half a pixel beyond its center).
    #[default]
    PixelEdges,
    PixelCenters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureOptions {
    pub extreme_source: ExtremeSource,
    pub depth_mode: DepthMode,
    pub extent: ExtentConvention,
    pub invalid_depth_tolerance: f64,
    pub refine_circle: bool,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            extreme_source: ExtremeSource::Mask,
            depth_mode: DepthMode::Shared,
            extent: ExtentConvention::PixelEdges,
            invalid_depth_tolerance: DEFAULT_INVALID_DEPTH_TOLERANCE,
            refine_circle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FruitMeasurement {
    pub height_mm: f64,
    pub width_mm: f64,
    pub extremes: ExtremePoints,
    pub median_depth_m: f64,
    pub circle: FittedCircle,
    pub fill_ratio: f64,
}

pub fn measure_fruit(
    mask: &BinaryMask,
    depth: &DepthImage,
    k: &CameraIntrinsics,
    opts: &MeasureOptions,
) -> Result<FruitMeasurement, SizingError> {
    measure_with_bbox(mask, None, depth, k, opts)
}

/// As [`measure_fruit`], with an explicit detector box for
/// [`ExtremeSource::Bbox`]. Without one the mask's tight box is used.
pub fn measure_with_bbox(
    mask: &BinaryMask,
    bbox: Option<&BBox>,
    depth: &DepthImage,
    k: &CameraIntrinsics,
    opts: &MeasureOptions,
) -> Result<FruitMeasurement, SizingError> {
    let edges = extract_edges(mask);
    if edges.is_empty() {
        return Err(MaskError::EmptyMask.into());
    }
    let d = median_edge_depth(&edges, depth, opts.invalid_depth_tolerance)?;
    let extremes = match opts.extreme_source {
        ExtremeSource::Mask => extreme_points(mask)?,
        ExtremeSource::Bbox => {
            let b = match bbox {
                Some(b) => *b,
                None => mask.bounding_box().ok_or(MaskError::EmptyMask)?,
            };
            bbox_extreme_points(&b)
        }
    };
    let (height_mm, width_mm) = size_from_extremes(&extremes, d, depth, k, opts)?;

    let points = edges.points();
    let mut circle = fit_circle_points(&points)?;
    if opts.refine_circle {
        circle = refine_circle(&points, circle);
    }
    let fill_ratio = fill_ratio(mask, &circle)?;
    Ok(FruitMeasurement { height_mm, width_mm, extremes, median_depth_m: d, circle, fill_ratio })
}

/// Height and width (mm) from the extreme points under the chosen depth mode.
pub fn size_from_extremes(
    e: &ExtremePoints,
    shared_depth_m: f64,
    depth: &DepthImage,
    k: &CameraIntrinsics,
    opts: &MeasureOptions,
) -> Result<(f64, f64), SizingError> {
    let half = match opts.extent {
        ExtentConvention::PixelEdges => 0.5,
        ExtentConvention::PixelCenters => 0.0,
    };
    let lift = |px: Pixel, du: f64, dv: f64| -> Result<Point3, GeometryError> {
        let z = match opts.depth_mode {
            DepthMode::Shared => shared_depth_m,
            DepthMode::PerPixel => {
                let (u, v) = (px.u.round(), px.v.round());
                if u >= 0.0 && v >= 0.0 {
                    depth.meters(u as u32, v as u32).unwrap_or(shared_depth_m)
                } else {
                    shared_depth_m
                }
            }
        };
        deproject(k, &Pixel::new(px.u + du, px.v + dv), z)
    };
    let top = lift(e.top, 0.0, -half)?;
    let bottom = lift(e.bottom, 0.0, half)?;
    let left = lift(e.left, -half, 0.0)?;
    let right = lift(e.right, half, 0.0)?;
    Ok((distance_mm(&top, &bottom), distance_mm(&left, &right)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(w: u32, h: u32, cu: f64, cv: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |u, v| {
            let (du, dv) = (u as f64 - cu, v as f64 - cv);
            du * du + dv * dv <= r * r
        })
    }

    #[test]
    fn euclidean_size_examples() {
        let top = Point3::new(0.0, -0.0197, 0.600);
        let bot = Point3::new(0.0, 0.0197, 0.600);
        assert!((distance_mm(&top, &bot) - 39.4).abs() < 1e-9);
        let l = Point3::origin();
        let r = Point3::new(0.001, 0.002, 0.002);
        assert!((distance_mm(&l, &r) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn circumscribed_circle() {
        let c = fit_circle_points(&[Pixel::new(0.0, 1.0), Pixel::new(1.0, 0.0), Pixel::new(0.0, -1.0)]).unwrap();
        assert!(c.cu.abs() < 1e-9 && c.cv.abs() < 1e-9 && (c.r_px - 1.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_and_too_few_points() {
        let line = [Pixel::new(0.0, 0.0), Pixel::new(1.0, 1.0), Pixel::new(2.0, 2.0)];
        assert!(matches!(fit_circle_points(&line), Err(SizingError::DegenerateCircle(_))));
        assert!(matches!(
            fit_circle_points(&line[..2]),
            Err(SizingError::DegenerateCircle(_))
        ));
    }

    #[test]
    fn refinement_keeps_exact_fit() {
        let pts: Vec<_> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.05;
                Pixel::new(30.0 + 25.0 * t.cos(), 40.0 + 25.0 * t.sin())
            })
            .collect();
        let c = refine_circle(&pts, fit_circle_points(&pts).unwrap());
        assert!((c.cu - 30.0).abs() < 1e-9 && (c.cv - 40.0).abs() < 1e-9 && (c.r_px - 25.0).abs() < 1e-9);
    }

    #[test]
    fn refinement_recovers_arc_better_than_algebraic() {
        // Noisy short arc: the algebraic fit is biased, geometric refinement less so.
        let pts: Vec<_> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.02;
                let r = 25.0 + if i % 2 == 0 { 0.4 } else { -0.4 };
                Pixel::new(30.0 + r * t.cos(), 40.0 + r * t.sin())
            })
            .collect();
        let kasa = fit_circle_points(&pts).unwrap();
        let refined = refine_circle(&pts, kasa);
        assert!((refined.r_px - 25.0).abs() <= (kasa.r_px - 25.0).abs() + 1e-9);
    }

    #[test]
    fn fill_ratio_examples() {
        let m = disc(100, 100, 50.0, 50.0, 20.0);
        let same = FittedCircle { cu: 50.0, cv: 50.0, r_px: 20.0 };
        assert!(fill_ratio(&m, &same).unwrap() >= 0.98);

        let upper = BinaryMask::from_fn(100, 100, |u, v| m.get(u, v) && v < 50);
        let outline = fit_circle(&extract_edges(&m)).unwrap();
        let f = fill_ratio(&upper, &outline).unwrap();
        assert!((f - 0.5).abs() <= 0.03, "half-disc fill ratio {f}");

        let far = FittedCircle { cu: 10.0, cv: 10.0, r_px: 5.0 };
        assert_eq!(fill_ratio(&disc(100, 100, 80.0, 80.0, 5.0), &far).unwrap(), 0.0);
    }

    #[test]
    fn fill_ratio_zero_area() {
        let tiny = FittedCircle { cu: 0.5, cv: 0.5, r_px: 0.1 };
        assert_eq!(fill_ratio(&BinaryMask::zeros(4, 4), &tiny), Err(SizingError::ZeroArea));
    }

    #[test]
    fn border_clipping_lowers_fill_ratio() {
        let clipped = disc(60, 60, 2.0, 30.0, 15.0);
        let full = FittedCircle { cu: 2.0, cv: 30.0, r_px: 15.0 };
        assert!(fill_ratio(&clipped, &full).unwrap() < 0.7);
    }

    fn flat_depth(w: u32, h: u32, sample: u16) -> DepthImage {
        DepthImage::new(w, h, vec![sample; (w * h) as usize], 0.001).unwrap()
    }

    #[test]
    fn disc_width_matches_similar_triangles() {
        let k = CameraIntrinsics::pinhole(400, 400, 500.0, 500.0, 200.0, 200.0);
        let m = disc(400, 400, 200.0, 200.0, 80.0);
        let meas = measure_fruit(&m, &flat_depth(400, 400, 600), &k, &MeasureOptions::default()).unwrap();
        let expected = 2.0 * meas.circle.r_px * 0.6 / 500.0 * 1000.0;
        assert!((meas.width_mm - expected).abs() / expected < 0.02);
        assert!((meas.height_mm - meas.width_mm).abs() < 1e-9);
        assert!(meas.fill_ratio > 0.95);
        assert_eq!(meas.median_depth_m, 0.6);
    }

    #[test]
    fn missing_edge_depth_is_reported() {
        let k = CameraIntrinsics::pinhole(100, 100, 100.0, 100.0, 50.0, 50.0);
        let m = disc(100, 100, 50.0, 50.0, 10.0);
        let err = measure_fruit(&m, &flat_depth(100, 100, 0), &k, &MeasureOptions::default()).unwrap_err();
        assert!(matches!(err, SizingError::Mask(MaskError::NoValidDepth { .. })));
        let err = measure_fruit(&BinaryMask::zeros(100, 100), &flat_depth(100, 100, 600), &k, &MeasureOptions::default())
            .unwrap_err();
        assert_eq!(err, SizingError::Mask(MaskError::EmptyMask));
    }

    #[test]
    fn extent_conventions_differ_by_one_pixel() {
        let k = CameraIntrinsics::pinhole(200, 200, 100.0, 100.0, 100.0, 100.0);
        let m = disc(200, 200, 100.0, 100.0, 30.0);
        let d = flat_depth(200, 200, 1000);
        let edges = measure_fruit(&m, &d, &k, &MeasureOptions::default()).unwrap();
        let centers = measure_fruit(
            &m,
            &d,
            &k,
            &MeasureOptions { extent: ExtentConvention::PixelCenters, ..Default::default() },
        )
        .unwrap();
        assert!((edges.width_mm - 610.0).abs() < 1e-9);
        assert!((centers.width_mm - 600.0).abs() < 1e-9);
    }

    #[test]
    fn bbox_source_and_per_pixel_mode() {
        let k = CameraIntrinsics::pinhole(200, 200, 100.0, 100.0, 100.0, 100.0);
        let m = disc(200, 200, 100.0, 100.0, 30.0);
        let d = flat_depth(200, 200, 1000);
        let wide = BBox { x: 60, y: 70, w: 81, h: 61 };
        let opts = MeasureOptions { extreme_source: ExtremeSource::Bbox, ..Default::default() };
        let meas = measure_with_bbox(&m, Some(&wide), &d, &k, &opts).unwrap();
        assert!((meas.width_mm - 810.0).abs() < 1e-9);
        assert!((meas.height_mm - 610.0).abs() < 1e-9);

        let opts = MeasureOptions { depth_mode: DepthMode::PerPixel, ..Default::default() };
        let per = measure_fruit(&m, &d, &k, &opts).unwrap();
        let shared = measure_fruit(&m, &d, &k, &MeasureOptions::default()).unwrap();
        assert!((per.width_mm - shared.width_mm).abs() < 1e-9);
    }
}
