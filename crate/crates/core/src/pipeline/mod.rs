//! Batch commands over capture bundles: calibrate, measure, fuse, evaluate
//! and simulate.
//!
//! Each `cmd_*` function reads its inputs from disk and writes canonical
//! JSON outputs. The in-memory stages they wrap ([`measure_frames`],
//! [`fuse_records`], [`evaluate_records`]) are public for callers that
//! already hold the data.
//!
//! Bundle layout:
//!
//! ```text
//! bundle/
//!   index.json                      frame list (BundleIndex)
//!   rig.json, intrinsics/<cam>.json
//!   <cam>/<frame>.depth.pgm         16-bit depth + <frame>.depth.json sidecar
//!   <cam>/<frame>.detections.json
//!   ground_truth.csv                optional
//! ```

pub mod io;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{evaluate_run, render_text, EvalError, EvalReport, EvalSample, GroundTruthRecord, Matching};
use crate::formats::{
    BundleIndex, Detection, DetectionFile, FrameEntry, MeasurementRecord, PosePairsFile, RecordsFile,
    Rejection, RejectionReason, RigCamera, RigCameraEntry, RigFile, RipenessClass,
};
use crate::fusion::{deduplicate, estimate_metric_radius, localize, LocalizedDetection, MatchThreshold, SelectionPolicy};
use crate::geometry::{
    align_depth_to_color, nearest_rotation, solve_camera_chain, CameraIntrinsics, DepthImage, GeometryError,
    Pixel, Point3, RigidTransform,
};
use crate::maskops::{encode_rle, MaskError, DEFAULT_INVALID_DEPTH_TOLERANCE};
use crate::simulate::{render_scene, CameraCapture, CaptureBundle, SceneSpec, SimError};
use crate::sizing::{measure_with_bbox, DepthMode, ExtentConvention, ExtremeSource, MeasureOptions, SizingError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("insufficient observations: {0}")]
    InsufficientObservations(String),
    #[error("unknown camera {0:?}")]
    UnknownCamera(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl PipelineError {
    /// Process exit code: 2 for unreadable or unwritable files, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Format { .. } => 2,
            _ => 1,
        }
    }
}

fn default_true() -> bool {
    true
}

/// Every tunable of the batch pipeline. All fields have defaults, so `{}` is
/// a valid config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Rig file used when a command is not given one explicitly.
    pub rig: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub dedup_threshold: MatchThreshold,
    #[serde(default = "default_true")]
    pub fill_ratio_selection: bool,
    pub invalid_depth_tolerance: f64,
    pub extreme_points: ExtremeSource,
    pub depth_mode: DepthMode,
    pub extent: ExtentConvention,
    pub circle_refinement: bool,
    /// Detections whose box lies closer than this to the image border are
    /// rejected. Zero keeps everything.
    pub min_edge_margin_px: u32,
    pub matching: Matching,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rig: None,
            output_dir: None,
            dedup_threshold: MatchThreshold::Max,
            fill_ratio_selection: true,
            invalid_depth_tolerance: DEFAULT_INVALID_DEPTH_TOLERANCE,
            extreme_points: ExtremeSource::Mask,
            depth_mode: DepthMode::Shared,
            extent: ExtentConvention::PixelEdges,
            circle_refinement: false,
            min_edge_margin_px: 0,
            matching: Matching::Auto,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let t = self.invalid_depth_tolerance;
        if !(t > 0.0 && t <= 1.0) {
            return Err(PipelineError::InvalidConfig(format!("invalid_depth_tolerance must be in (0, 1], got {t}")));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let cfg: Self = io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn measure_options(&self) -> MeasureOptions {
        MeasureOptions {
            extreme_source: self.extreme_points,
            depth_mode: self.depth_mode,
            extent: self.extent,
            invalid_depth_tolerance: self.invalid_depth_tolerance,
            refine_circle: self.circle_refinement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunCounts {
    pub frames: usize,
    pub detections: usize,
    pub records: usize,
    pub rejections: usize,
    pub clusters: usize,
}

/// Run metadata. Timings live here so canonical outputs stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input: String,
    pub config: PipelineConfig,
    pub timings_ms: BTreeMap<String, f64>,
    pub counts: RunCounts,
    pub warnings: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, input: &Path, config: &PipelineConfig) -> Self {
        Self {
            command: command.to_string(),
            input: input.display().to_string(),
            config: config.clone(),
            timings_ms: BTreeMap::new(),
            counts: RunCounts::default(),
            warnings: Vec::new(),
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

/// A rig with intrinsics resolved, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub world_anchor: Option<String>,
    pub cameras: Vec<RigCamera>,
}

impl Rig {
    pub fn camera(&self, id: &str) -> Result<&RigCamera, PipelineError> {
        self.cameras.iter().find(|c| c.id == id).ok_or_else(|| PipelineError::UnknownCamera(id.to_string()))
    }

    pub fn camera_order(&self) -> Vec<String> {
        self.cameras.iter().map(|c| c.id.clone()).collect()
    }

    fn validate(&self) -> Result<(), PipelineError> {
        for c in &self.cameras {
            c.intrinsics.validate().map_err(|e| PipelineError::InvalidInput(format!("camera {}: {e}", c.id)))?;
            c.cam_to_world.validate().map_err(|e| PipelineError::InvalidPose(format!("camera {}: {e}", c.id)))?;
        }
        Ok(())
    }
}

/// Reads a rig file; intrinsics paths are relative to the rig's directory.
pub fn load_rig(path: &Path) -> Result<Rig, PipelineError> {
    let file: RigFile = io::read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let cameras = file
        .cameras
        .into_iter()
        .map(|c| {
            Ok(RigCamera {
                intrinsics: io::read_json::<CameraIntrinsics>(&dir.join(&c.intrinsics_file))?,
                id: c.id,
                cam_to_world: c.cam_to_world,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let rig = Rig { world_anchor: file.world_anchor, cameras };
    rig.validate()?;
    Ok(rig)
}

// ---------------------------------------------------------------- calibrate

/// Mean of rigid transforms: chordal mean of rotations, arithmetic mean of
/// translations.
pub fn mean_transform(ts: &[RigidTransform]) -> RigidTransform {
    assert!(!ts.is_empty());
    let n = ts.len() as f64;
    let r = ts.iter().fold(nalgebra::Matrix3::zeros(), |acc, t| acc + t.rotation());
    let t = ts.iter().fold(nalgebra::Vector3::zeros(), |acc, t| acc + t.translation()) / n;
    RigidTransform::from_parts_unchecked(nearest_rotation(&r), t)
}

/// Builds a rig from simultaneous board poses.
///
/// Cameras are linked through shared observations and resolved breadth-first
/// from `anchor`, whose frame becomes the world frame.
pub fn calibrate_rig(poses: &PosePairsFile, anchor: &str) -> Result<RigFile, PipelineError> {
    for (i, obs) in poses.observations.iter().enumerate() {
        for (cam, t) in &obs.poses {
            t.validate().map_err(|e| PipelineError::InvalidPose(format!("observation {i}, camera {cam}: {e}")))?;
            if !poses.cameras.iter().any(|c| &c.id == cam) {
                return Err(PipelineError::UnknownCamera(cam.clone()));
            }
        }
    }
    if !poses.cameras.iter().any(|c| c.id == anchor) {
        return Err(PipelineError::UnknownCamera(anchor.to_string()));
    }
    if !poses.observations.iter().any(|o| o.poses.contains_key(anchor)) {
        return Err(PipelineError::InsufficientObservations(format!("no board poses for anchor camera {anchor}")));
    }

    let mut cam_to_world: HashMap<&str, RigidTransform> = HashMap::new();
    cam_to_world.insert(anchor, RigidTransform::identity());
    let mut queue = VecDeque::from([anchor]);
    while let Some(solved) = queue.pop_front() {
        for cam in &poses.cameras {
            let id = cam.id.as_str();
            if cam_to_world.contains_key(id) {
                continue;
            }
            let chains: Vec<RigidTransform> = poses
                .observations
                .iter()
                .filter_map(|o| Some(solve_camera_chain(o.poses.get(id)?, o.poses.get(solved)?)))
                .collect::<Result<_, _>>()
                .map_err(|e| PipelineError::InvalidPose(format!("{id} to {solved}: {e}")))?;
            if chains.is_empty() {
                continue;
            }
            let to_solved = mean_transform(&chains);
            cam_to_world.insert(id, cam_to_world[solved].compose(&to_solved));
            queue.push_back(id);
        }
    }

    let cameras = poses
        .cameras
        .iter()
        .map(|c| {
            let t = cam_to_world.get(c.id.as_str()).ok_or_else(|| {
                PipelineError::InsufficientObservations(format!("camera {} shares no board pose with the rig", c.id))
            })?;
            Ok(RigCameraEntry { id: c.id.clone(), intrinsics_file: c.intrinsics_file.clone(), cam_to_world: *t })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(RigFile { world_anchor: Some(anchor.to_string()), cameras })
}

pub fn cmd_calibrate(poses_path: &Path, anchor: &str, out: &Path) -> Result<RigFile, PipelineError> {
    let poses: PosePairsFile = io::read_json(poses_path)?;
    let rig = calibrate_rig(&poses, anchor)?;
    io::write_json(out, &rig)?;
    log::info!("calibrated {} cameras against {anchor}", rig.cameras.len());
    Ok(rig)
}

// ------------------------------------------------------------------ measure

/// One camera frame ready for measurement: depth already in the color grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    pub camera_id: String,
    pub depth: DepthImage,
    pub detections: Vec<Detection>,
}

fn rejection_reason(e: &SizingError) -> RejectionReason {
    match e {
        SizingError::Mask(MaskError::EmptyMask) => RejectionReason::EmptyMask,
        SizingError::Mask(MaskError::NoValidDepth { .. }) => RejectionReason::NoValidDepth,
        SizingError::Mask(_) => RejectionReason::BadMask,
        SizingError::Geometry(_) => RejectionReason::InvalidGeometry,
        SizingError::DegenerateCircle(_) => RejectionReason::DegenerateCircle,
        SizingError::ZeroArea => RejectionReason::ZeroArea,
    }
}

fn measure_detection(
    frame: &Frame,
    index: usize,
    det: &Detection,
    k: &CameraIntrinsics,
    cfg: &PipelineConfig,
) -> Result<MeasurementRecord, Rejection> {
    let reject = |reason, message: String| Rejection {
        frame_id: frame.frame_id.clone(),
        camera_id: frame.camera_id.clone(),
        detection_index: index,
        reason,
        message,
    };
    let mask = det.mask_rle.decode().map_err(|e| reject(RejectionReason::BadMask, e.to_string()))?;
    if (mask.width(), mask.height()) != (k.width, k.height) {
        return Err(reject(
            RejectionReason::BadMask,
            format!("mask is {}x{}, image is {}x{}", mask.width(), mask.height(), k.width, k.height),
        ));
    }
    let edge_margin_px = det.bbox.edge_margin(k.width, k.height);
    if edge_margin_px < cfg.min_edge_margin_px {
        return Err(reject(
            RejectionReason::EdgeMargin,
            format!("box is {edge_margin_px} px from the border (minimum {})", cfg.min_edge_margin_px),
        ));
    }
    let m = measure_with_bbox(&mask, Some(&det.bbox), &frame.depth, k, &cfg.measure_options())
        .map_err(|e| reject(rejection_reason(&e), e.to_string()))?;
    Ok(MeasurementRecord {
        frame_id: frame.frame_id.clone(),
        camera_id: frame.camera_id.clone(),
        detection_index: index,
        class: det.class,
        fruit_id: det.fruit_id.clone(),
        height_mm: m.height_mm,
        width_mm: m.width_mm,
        median_depth_m: m.median_depth_m,
        fill_ratio: m.fill_ratio,
        circle: m.circle,
        bbox: det.bbox,
        edge_margin_px,
    })
}

/// Measures every detection. Each one ends up either as a record or as a
/// rejection, in frame then detection order.
pub fn measure_frames(frames: &[Frame], rig: &Rig, cfg: &PipelineConfig) -> Result<RecordsFile, PipelineError> {
    cfg.validate()?;
    let cams = frames
        .iter()
        .map(|f| {
            let cam = rig.camera(&f.camera_id)?;
            let k = &cam.intrinsics;
            if (f.depth.width(), f.depth.height()) != (k.width, k.height) {
                return Err(PipelineError::InvalidInput(format!(
                    "frame {}/{}: depth is {}x{}, camera is {}x{}",
                    f.camera_id,
                    f.frame_id,
                    f.depth.width(),
                    f.depth.height(),
                    k.width,
                    k.height
                )));
            }
            Ok(cam)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Vec<Result<MeasurementRecord, Rejection>>> = frames
        .par_iter()
        .zip(cams.par_iter())
        .map(|(f, cam)| {
            f.detections
                .par_iter()
                .enumerate()
                .map(|(i, d)| measure_detection(f, i, d, &cam.intrinsics, cfg))
                .collect()
        })
        .collect();
    let mut out = RecordsFile::default();
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(rej) => out.rejections.push(rej),
        }
    }
    Ok(out)
}

fn load_frame(bundle: &Path, entry: &FrameEntry, rig: &Rig) -> Result<Frame, PipelineError> {
    let mut depth = io::read_depth(&bundle.join(&entry.depth))?;
    let dets_path = bundle.join(&entry.detections);
    let dets: DetectionFile = io::read_json(&dets_path)?;
    if dets.camera_id != entry.camera_id || dets.frame_id != entry.frame_id {
        return Err(PipelineError::Format {
            path: dets_path,
            message: format!(
                "detections are for {}/{}, index expects {}/{}",
                dets.camera_id, dets.frame_id, entry.camera_id, entry.frame_id
            ),
        });
    }
    if let Some(a) = &entry.alignment {
        let depth_k: CameraIntrinsics = io::read_json(&bundle.join(&a.depth_intrinsics_file))?;
        a.depth_to_color
            .validate()
            .map_err(|e| PipelineError::InvalidPose(format!("alignment of {}: {e}", entry.depth)))?;
        let color_k = &rig.camera(&entry.camera_id)?.intrinsics;
        depth = align_depth_to_color(&depth, &depth_k, color_k, &a.depth_to_color);
    }
    Ok(Frame { frame_id: entry.frame_id.clone(), camera_id: entry.camera_id.clone(), depth, detections: dets.detections })
}

fn resolve_rig(explicit: Option<&Path>, cfg: &PipelineConfig, fallback: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).or_else(|| cfg.rig.clone()).unwrap_or_else(|| fallback.to_path_buf())
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

/// Measures a bundle and writes `records.json` and `manifest.json` to `out_dir`.
///
/// The rig defaults to the config's, then to `rig.json` inside the bundle.
pub fn cmd_measure(
    bundle: &Path,
    rig_path: Option<&Path>,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<(RecordsFile, RunManifest), PipelineError> {
    cfg.validate()?;
    let mut manifest = RunManifest::new("measure", bundle, cfg);
    let rig = load_rig(&resolve_rig(rig_path, cfg, &bundle.join("rig.json")))?;
    let index: BundleIndex = io::read_json(&bundle.join("index.json"))?;
    let frames = manifest.time("load", || {
        index.frames.par_iter().map(|e| load_frame(bundle, e, &rig)).collect::<Result<Vec<_>, _>>()
    })?;
    let records = manifest.time("measure", || measure_frames(&frames, &rig, cfg))?;

    manifest.counts = RunCounts {
        frames: frames.len(),
        detections: frames.iter().map(|f| f.detections.len()).sum(),
        records: records.records.len(),
        rejections: records.rejections.len(),
        clusters: 0,
    };
    for r in &records.rejections {
        let w = format!("{}/{} detection {}: {}", r.camera_id, r.frame_id, r.detection_index, r.message);
        log::warn!("{w}");
        manifest.warnings.push(w);
    }
    let truth_path = bundle.join(GROUND_TRUTH_FILE);
    if truth_path.exists() {
        let seen: Vec<&str> =
            frames.iter().flat_map(|f| f.detections.iter().filter_map(|d| d.fruit_id.as_deref())).collect();
        for t in io::read_ground_truth(&truth_path)? {
            if !seen.contains(&t.fruit_id.as_str()) {
                let w = format!("fruit {} has no detection in any view", t.fruit_id);
                log::warn!("{w}");
                manifest.warnings.push(w);
            }
        }
    }
    io::write_json(&out_dir.join("records.json"), &records)?;
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;
    log::info!("measured {} detections: {} records", manifest.counts.detections, manifest.counts.records);
    Ok((records, manifest))
}

// --------------------------------------------------------------------- fuse

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedMember {
    pub frame_id: String,
    pub camera_id: String,
    pub detection_index: usize,
    pub center_world: Point3,
    pub radius_m: f64,
    pub fill_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedFruit {
    pub center_world: Point3,
    pub radius_m: f64,
    /// The representative measurement of this fruit.
    pub chosen: MeasurementRecord,
    pub members: Vec<FusedMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FusedFile {
    pub fruits: Vec<FusedFruit>,
}

fn localize_record(rec: &MeasurementRecord, cam: &RigCamera) -> Result<LocalizedDetection, GeometryError> {
    let k = &cam.intrinsics;
    let radius_m = estimate_metric_radius(&rec.circle, rec.median_depth_m, k)?;
    // A fruit clipped by the border can have its circle center outside the
    // image; the box center still lies on the fruit.
    let circle_center = Pixel::new(rec.circle.cu, rec.circle.cv);
    let center_px = if k.contains(&circle_center) { circle_center } else { rec.bbox.center() };
    let center_world = localize(&center_px, rec.median_depth_m, radius_m, k, &cam.cam_to_world)?;
    Ok(LocalizedDetection { center_world, radius_m, record: rec.clone() })
}

/// Localizes every record in the world frame, merges views of the same fruit
/// and picks each fruit's representative view.
pub fn fuse_records(records: &[MeasurementRecord], rig: &Rig, cfg: &PipelineConfig) -> Result<FusedFile, PipelineError> {
    let items = records
        .iter()
        .map(|r| {
            let cam = rig.camera(&r.camera_id)?;
            localize_record(r, cam).map_err(|e| {
                PipelineError::InvalidInput(format!("{}/{} detection {}: {e}", r.camera_id, r.frame_id, r.detection_index))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let policy = SelectionPolicy { camera_order: rig.camera_order(), by_fill_ratio: cfg.fill_ratio_selection };
    let fruits = deduplicate(items, cfg.dedup_threshold, &policy)
        .into_iter()
        .map(|c| FusedFruit {
            center_world: c.center_world,
            radius_m: c.radius_m,
            chosen: c.chosen_record().clone(),
            members: c
                .members
                .iter()
                .map(|m| FusedMember {
                    frame_id: m.record.frame_id.clone(),
                    camera_id: m.record.camera_id.clone(),
                    detection_index: m.record.detection_index,
                    center_world: m.center_world,
                    radius_m: m.radius_m,
                    fill_ratio: m.record.fill_ratio,
                })
                .collect(),
        })
        .collect();
    Ok(FusedFile { fruits })
}

pub fn cmd_fuse(
    records_path: &Path,
    rig_path: Option<&Path>,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<FusedFile, PipelineError> {
    cfg.validate()?;
    let records: RecordsFile = io::read_json(records_path)?;
    let fallback = records_path.parent().unwrap_or(Path::new("")).join("rig.json");
    let rig = load_rig(&resolve_rig(rig_path, cfg, &fallback))?;
    let fused = fuse_records(&records.records, &rig, cfg)?;
    io::write_json(out, &fused)?;
    log::info!("fused {} records into {} fruits", records.records.len(), fused.fruits.len());
    Ok(fused)
}

// ----------------------------------------------------------------- evaluate

pub const FUSED_LABEL: &str = "fused";

/// Scores each camera's records and the fused selection against ground truth.
/// Per-camera records take their world centers from the fused membership.
pub fn evaluate_records(
    fused: &FusedFile,
    records: &[MeasurementRecord],
    truth: &[GroundTruthRecord],
    cfg: &PipelineConfig,
) -> Result<EvalReport, PipelineError> {
    let mut centers: HashMap<(&str, &str, usize), Point3> = HashMap::new();
    for f in &fused.fruits {
        for m in &f.members {
            centers.insert((&m.frame_id, &m.camera_id, m.detection_index), m.center_world);
        }
    }
    let per_camera: Vec<EvalSample> = records
        .iter()
        .map(|r| EvalSample {
            label: format!("{}/{} detection {}", r.camera_id, r.frame_id, r.detection_index),
            camera_id: r.camera_id.clone(),
            fruit_id: r.fruit_id.clone(),
            center_world: centers.get(&(r.frame_id.as_str(), r.camera_id.as_str(), r.detection_index)).copied(),
            height_mm: r.height_mm,
            width_mm: r.width_mm,
            fill_ratio: r.fill_ratio,
        })
        .collect();
    let fused_samples: Vec<EvalSample> = fused
        .fruits
        .iter()
        .enumerate()
        .map(|(i, f)| EvalSample {
            label: format!("fused fruit {i}"),
            camera_id: FUSED_LABEL.to_string(),
            fruit_id: f.chosen.fruit_id.clone(),
            center_world: Some(f.center_world),
            height_mm: f.chosen.height_mm,
            width_mm: f.chosen.width_mm,
            fill_ratio: f.chosen.fill_ratio,
        })
        .collect();
    Ok(evaluate_run(&fused_samples, &per_camera, truth, cfg.matching)?)
}

/// Writes `<prefix>.json` (canonical) and `<prefix>.txt`.
pub fn cmd_evaluate(
    fused_path: &Path,
    records_path: &Path,
    truth_path: &Path,
    cfg: &PipelineConfig,
    out_prefix: &Path,
) -> Result<EvalReport, PipelineError> {
    cfg.validate()?;
    let fused: FusedFile = io::read_json(fused_path)?;
    let records: RecordsFile = io::read_json(records_path)?;
    let truth = io::read_ground_truth(truth_path)?;
    let report = evaluate_records(&fused, &records.records, &truth, cfg)?;
    io::write_json(&with_suffix(out_prefix, "json"), &report)?;
    io::write_bytes(&with_suffix(out_prefix, "txt"), render_text(&report).as_bytes())?;
    Ok(report)
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

// ----------------------------------------------------------------- simulate

/// Detections a perfect segmenter would report for one rendered camera.
pub fn detections_from_capture(cam: &CameraCapture) -> Vec<Detection> {
    cam.views
        .iter()
        .map(|v| Detection {
            class: RipenessClass::FullyRipened,
            score: 1.0,
            bbox: v.bbox,
            mask_rle: encode_rle(&v.mask),
            fruit_id: Some(v.fruit_id.clone()),
        })
        .collect()
}

/// The rig and measurable frames of a rendered capture, without touching disk.
pub fn frames_from_capture(bundle: &CaptureBundle) -> (Rig, Vec<Frame>) {
    let rig = Rig {
        world_anchor: anchor_of(bundle),
        cameras: bundle
            .cameras
            .iter()
            .map(|c| RigCamera { id: c.camera_id.clone(), intrinsics: c.intrinsics.clone(), cam_to_world: c.cam_to_world })
            .collect(),
    };
    let frames = bundle
        .cameras
        .iter()
        .map(|c| Frame {
            frame_id: bundle.frame_id.clone(),
            camera_id: c.camera_id.clone(),
            depth: c.depth.clone(),
            detections: detections_from_capture(c),
        })
        .collect();
    (rig, frames)
}

fn anchor_of(bundle: &CaptureBundle) -> Option<String> {
    bundle.cameras.iter().find(|c| c.cam_to_world == RigidTransform::identity()).map(|c| c.camera_id.clone())
}

/// Writes a rendered capture in the bundle layout read by [`cmd_measure`].
pub fn write_bundle(bundle: &CaptureBundle, out_dir: &Path) -> Result<(), PipelineError> {
    let mut rig = RigFile { world_anchor: anchor_of(bundle), cameras: Vec::new() };
    let mut index = BundleIndex { frames: Vec::new() };
    for cam in &bundle.cameras {
        let intrinsics_file = format!("intrinsics/{}.json", cam.camera_id);
        io::write_json(&out_dir.join(&intrinsics_file), &cam.intrinsics)?;
        rig.cameras.push(RigCameraEntry {
            id: cam.camera_id.clone(),
            intrinsics_file,
            cam_to_world: cam.cam_to_world,
        });

        let depth = format!("{}/{}.depth.pgm", cam.camera_id, bundle.frame_id);
        let detections = format!("{}/{}.detections.json", cam.camera_id, bundle.frame_id);
        io::write_depth(&out_dir.join(&depth), &cam.depth)?;
        let dets = DetectionFile {
            frame_id: bundle.frame_id.clone(),
            camera_id: cam.camera_id.clone(),
            detections: detections_from_capture(cam),
        };
        io::write_json(&out_dir.join(&detections), &dets)?;
        index.frames.push(FrameEntry {
            frame_id: bundle.frame_id.clone(),
            camera_id: cam.camera_id.clone(),
            depth,
            detections,
            alignment: None,
        });
    }
    io::write_json(&out_dir.join("rig.json"), &rig)?;
    io::write_json(&out_dir.join("index.json"), &index)?;
    io::write_bytes(&out_dir.join(GROUND_TRUTH_FILE), &io::ground_truth_csv(&bundle.truth))
}

pub fn cmd_simulate(scene_path: &Path, out_dir: &Path) -> Result<CaptureBundle, PipelineError> {
    let spec: SceneSpec = io::read_json(scene_path)?;
    let bundle = render_scene(&spec)?;
    write_bundle(&bundle, out_dir)?;
    log::info!(
        "rendered {} cameras, {} fruit views",
        bundle.cameras.len(),
        bundle.cameras.iter().map(|c| c.views.len()).sum::<usize>()
    );
    Ok(bundle)
}
