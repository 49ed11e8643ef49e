//! Serialized file shapes shared by the pipeline stages: detections,
//! measurement records, rigs, depth sidecars and ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::maskops::{BBox, Rle};
use crate::sizing::FittedCircle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipenessClass {
    FullyRipened,
    HalfRipened,
    Green,
}

/// One instance from the segmentation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: RipenessClass,
    pub score: f64,
    pub bbox: BBox,
    pub mask_rle: Rle,
    /// Ground-truth identity, present only for synthetic captures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fruit_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFile {
    pub frame_id: String,
    pub camera_id: String,
    pub detections: Vec<Detection>,
}

/// Per-view measurement as emitted by `measure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub frame_id: String,
    pub camera_id: String,
    pub detection_index: usize,
    pub class: RipenessClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fruit_id: Option<String>,
    pub height_mm: f64,
    pub width_mm: f64,
    pub median_depth_m: f64,
    pub fill_ratio: f64,
    pub circle: FittedCircle,
    pub bbox: BBox,
    /// Pixels between the box and the nearest image border.
    pub edge_margin_px: u32,
}

impl MeasurementRecord {
    pub fn key(&self) -> (String, String, usize) {
        (self.frame_id.clone(), self.camera_id.clone(), self.detection_index)
    }
}

/// Why a detection produced no measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    EmptyMask,
    NoValidDepth,
    DegenerateCircle,
    ZeroArea,
    InvalidGeometry,
    EdgeMargin,
    BadMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub frame_id: String,
    pub camera_id: String,
    pub detection_index: usize,
    pub reason: RejectionReason,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RecordsFile {
    pub records: Vec<MeasurementRecord>,
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigCameraEntry {
    pub id: String,
    /// Path relative to the rig file's directory.
    pub intrinsics_file: String,
    pub cam_to_world: RigidTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world_anchor: Option<String>,
    pub cameras: Vec<RigCameraEntry>,
}

/// A rig with intrinsics resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RigCamera {
    pub id: String,
    pub intrinsics: CameraIntrinsics,
    pub cam_to_world: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub depth_scale: f64,
}

/// Optional depth-to-color registration for a frame whose depth is not
/// already in the color camera's pixel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub depth_intrinsics_file: String,
    pub depth_to_color: RigidTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub frame_id: String,
    pub camera_id: String,
    /// Paths relative to the bundle directory.
    pub depth: String,
    pub detections: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentEntry>,
}

/// `index.json` at the root of a capture bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleIndex {
    pub frames: Vec<FrameEntry>,
}

/// Simultaneous board poses (board-to-camera) keyed by camera id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseObservation {
    pub poses: BTreeMap<String, RigidTransform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseCamera {
    pub id: String,
    pub intrinsics_file: String,
}

/// Input of `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePairsFile {
    pub cameras: Vec<PoseCamera>,
    pub observations: Vec<PoseObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub fruit_id: String,
    pub height_mm: f64,
    pub width_mm: f64,
    pub x_m: Option<f64>,
    pub y_m: Option<f64>,
    pub z_m: Option<f64>,
}
