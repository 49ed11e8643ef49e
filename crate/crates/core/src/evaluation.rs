//! Ground-truth comparison: RMSE, accuracy and per-camera / fused reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {measured} measurements vs {truth} truth values")]
    LengthMismatch { measured: usize, truth: usize },
    #[error("mean fruit size must be positive, got {0}")]
    ZeroMean(f64),
    #[error("ambiguous match for {what}: nearest {nearest_m:.4} m, second {second_m:.4} m")]
    AmbiguousMatch { what: String, nearest_m: f64, second_m: f64 },
    #[error("no ground truth for {0}")]
    UnmatchedMeasurement(String),
    #[error("invalid ground truth: {0}")]
    InvalidTruth(String),
}

/// Root-mean-square error with unit weights.
pub fn rmse(measured: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    let sigma = vec![1.0; measured.len()];
    weighted_rmse(measured, truth, &sigma)
}

/// `sqrt(mean(((d_i - f_i) / σ_i)²))`.
pub fn weighted_rmse(measured: &[f64], truth: &[f64], sigma: &[f64]) -> Result<f64, EvalError> {
    if measured.len() != truth.len() || sigma.len() != truth.len() {
        return Err(EvalError::LengthMismatch { measured: measured.len(), truth: truth.len() });
    }
    if measured.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = measured
        .iter()
        .zip(truth)
        .zip(sigma)
        .map(|((d, f), s)| ((d - f) / s).powi(2))
        .sum();
    Ok((sum / measured.len() as f64).sqrt())
}

/// `1 − rmse / mean`.
pub fn accuracy(rmse_mm: f64, mean_truth_mm: f64) -> Result<f64, EvalError> {
    Ok(1.0 - relative_error(rmse_mm, mean_truth_mm)?)
}

/// `rmse / mean`.
pub fn relative_error(rmse_mm: f64, mean_truth_mm: f64) -> Result<f64, EvalError> {
    if !(mean_truth_mm > 0.0) {
        return Err(EvalError::ZeroMean(mean_truth_mm));
    }
    Ok(rmse_mm / mean_truth_mm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub fruit_id: String,
    pub height_mm: f64,
    pub width_mm: f64,
    pub center_world: Option<Point3>,
}

impl GroundTruthRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.height_mm > 0.0 && self.width_mm > 0.0) {
            return Err(EvalError::InvalidTruth(format!("fruit {} has non-positive size", self.fruit_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    /// Fruit id when the sample carries one, nearest center otherwise.
    #[default]
    Auto,
    FruitId,
    NearestCenter,
}

/// One measurement to be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub label: String,
    pub camera_id: String,
    pub fruit_id: Option<String>,
    pub center_world: Option<Point3>,
    pub height_mm: f64,
    pub width_mm: f64,
    pub fill_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub rmse_mm: f64,
    pub accuracy: f64,
    pub relative_error: f64,
    pub mean_truth_mm: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub label: String,
    pub n: usize,
    pub height: DimensionStats,
    pub width: DimensionStats,
    pub mean_fill_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cameras: Vec<EvalRow>,
    pub fused: Option<EvalRow>,
    pub n_truth: usize,
}

impl EvalReport {
    pub fn camera(&self, id: &str) -> Option<&EvalRow> {
        self.cameras.iter().find(|r| r.label == id)
    }
}

/// Multiple of the nearest distance the runner-up must exceed.
pub const MATCH_AMBIGUITY_RATIO: f64 = 2.0;

fn match_truth<'a>(
    sample: &EvalSample,
    truth: &'a [GroundTruthRecord],
    matching: Matching,
) -> Result<&'a GroundTruthRecord, EvalError> {
    let by_id = match matching {
        Matching::FruitId => true,
        Matching::NearestCenter => false,
        Matching::Auto => sample.fruit_id.is_some(),
    };
    if by_id {
        let id = sample
            .fruit_id
            .as_deref()
            .ok_or_else(|| EvalError::UnmatchedMeasurement(format!("{} (no fruit id)", sample.label)))?;
        return truth
            .iter()
            .find(|t| t.fruit_id == id)
            .ok_or_else(|| EvalError::UnmatchedMeasurement(format!("{} (fruit id {id})", sample.label)));
    }
    let center = sample
        .center_world
        .ok_or_else(|| EvalError::UnmatchedMeasurement(format!("{} (no world center)", sample.label)))?;
    let mut dists: Vec<(f64, &GroundTruthRecord)> = truth
        .iter()
        .filter_map(|t| t.center_world.map(|c| ((c - center).norm(), t)))
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0));
    match dists.as_slice() {
        [] => Err(EvalError::UnmatchedMeasurement(format!("{} (truth has no centers)", sample.label))),
        [(_, t)] => Ok(t),
        [(d1, t), (d2, _), ..] => {
            if *d2 > MATCH_AMBIGUITY_RATIO * d1 {
                Ok(t)
            } else {
                Err(EvalError::AmbiguousMatch { what: sample.label.clone(), nearest_m: *d1, second_m: *d2 })
            }
        }
    }
}

fn score_row(
    label: &str,
    samples: &[&EvalSample],
    truth: &[GroundTruthRecord],
    matching: Matching,
    mean_height: f64,
    mean_width: f64,
) -> Result<EvalRow, EvalError> {
    let mut mh = Vec::with_capacity(samples.len());
    let mut th = Vec::with_capacity(samples.len());
    let mut mw = Vec::with_capacity(samples.len());
    let mut tw = Vec::with_capacity(samples.len());
    for s in samples {
        let t = match_truth(s, truth, matching)?;
        mh.push(s.height_mm);
        th.push(t.height_mm);
        mw.push(s.width_mm);
        tw.push(t.width_mm);
    }
    let n = samples.len();
    let stats = |m: &[f64], t: &[f64], mean: f64| -> Result<DimensionStats, EvalError> {
        let r = rmse(m, t)?;
        Ok(DimensionStats {
            rmse_mm: r,
            accuracy: accuracy(r, mean)?,
            relative_error: relative_error(r, mean)?,
            mean_truth_mm: mean,
            n,
        })
    };
    Ok(EvalRow {
        label: label.to_string(),
        n,
        height: stats(&mh, &th, mean_height)?,
        width: stats(&mw, &tw, mean_width)?,
        mean_fill_ratio: samples.iter().map(|s| s.fill_ratio).sum::<f64>() / n as f64,
    })
}

/// Scores per-camera measurements (one row per camera, in order of first
/// appearance) and the fused selection against ground truth.
///
/// The mean fruit size in every row is the mean over the whole truth table.
pub fn evaluate_run(
    fused: &[EvalSample],
    per_camera: &[EvalSample],
    truth: &[GroundTruthRecord],
    matching: Matching,
) -> Result<EvalReport, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    for t in truth {
        t.validate()?;
    }
    let n_truth = truth.len() as f64;
    let mean_height = truth.iter().map(|t| t.height_mm).sum::<f64>() / n_truth;
    let mean_width = truth.iter().map(|t| t.width_mm).sum::<f64>() / n_truth;

    let mut camera_ids: Vec<&str> = Vec::new();
    for s in per_camera {
        if !camera_ids.contains(&s.camera_id.as_str()) {
            camera_ids.push(&s.camera_id);
        }
    }
    let cameras = camera_ids
        .iter()
        .map(|id| {
            let rows: Vec<&EvalSample> = per_camera.iter().filter(|s| s.camera_id == *id).collect();
            score_row(id, &rows, truth, matching, mean_height, mean_width)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fused = if fused.is_empty() {
        None
    } else {
        let rows: Vec<&EvalSample> = fused.iter().collect();
        Some(score_row("fused", &rows, truth, matching, mean_height, mean_width)?)
    };
    Ok(EvalReport { cameras, fused, n_truth: truth.len() })
}

fn title(label: &str) -> String {
    if label == "fused" {
        return "3-Camera Fill Ratio".to_string();
    }
    let mut c = label.chars();
    match c.next() {
        Some(f) => format!("{}{} Camera", f.to_uppercase(), c.as_str()),
        None => "Camera".to_string(),
    }
}

/// Plain-text tables, one per row of the report.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let rows = report.cameras.iter().chain(report.fused.iter());
    for row in rows {
        let t = title(&row.label);
        let w = t.len().max(8);
        let _ = writeln!(out, "{t:<w$} | RMSE (mm) | Accuracy");
        let _ = writeln!(out, "{:<w$} | {:>9.4} | {:.4}", "Height", row.height.rmse_mm, row.height.accuracy);
        let _ = writeln!(out, "{:<w$} | {:>9.4} | {:.4}", "Width", row.width.rmse_mm, row.width.accuracy);
        let _ = writeln!(
            out,
            "n = {} of {}, mean height {:.1} mm, mean width {:.1} mm, mean fill ratio {:.6}",
            row.n, report.n_truth, row.height.mean_truth_mm, row.width.mean_truth_mm, row.mean_fill_ratio
        );
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(id: &str, h: f64, w: f64, x: f64) -> GroundTruthRecord {
        GroundTruthRecord {
            fruit_id: id.into(),
            height_mm: h,
            width_mm: w,
            center_world: Some(Point3::new(x, 0.0, 0.6)),
        }
    }

    fn sample(cam: &str, id: Option<&str>, x: f64, h: f64, w: f64) -> EvalSample {
        EvalSample {
            label: format!("{cam}:{id:?}"),
            camera_id: cam.into(),
            fruit_id: id.map(String::from),
            center_world: Some(Point3::new(x, 0.0, 0.6)),
            height_mm: h,
            width_mm: w,
            fill_ratio: 0.9,
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[13.0, 24.0], &[10.0, 20.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rmse(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch { measured: 1, truth: 2 }));
        assert_eq!(rmse(&[], &[]), Err(EvalError::EmptyInput));
    }

    #[test]
    fn weighted_rmse_scales_by_sigma() {
        let r = weighted_rmse(&[12.0, 14.0], &[10.0, 10.0], &[2.0, 4.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_examples() {
        assert!((accuracy(3.4920, 39.4).unwrap() - 0.9114).abs() <= 1e-4);
        assert!((accuracy(2.6000, 46.7).unwrap() - 0.9443).abs() <= 1e-4);
        assert_eq!(accuracy(0.0, 39.4).unwrap(), 1.0);
        assert!((relative_error(3.4920, 39.4).unwrap() - 0.0886).abs() <= 1e-4);
        assert!(matches!(accuracy(1.0, 0.0), Err(EvalError::ZeroMean(_))));
    }

    #[test]
    fn perfect_run_scores_one() {
        let t = vec![truth("a", 39.0, 46.0, 0.0), truth("b", 40.0, 47.0, 0.1)];
        let s = vec![sample("middle", Some("a"), 0.0, 39.0, 46.0), sample("middle", Some("b"), 0.1, 40.0, 47.0)];
        let r = evaluate_run(&s, &s, &t, Matching::Auto).unwrap();
        assert_eq!(r.cameras.len(), 1);
        let f = r.fused.unwrap();
        assert_eq!((f.height.accuracy, f.width.accuracy), (1.0, 1.0));
        assert_eq!(f.height.rmse_mm, 0.0);
    }

    #[test]
    fn nearest_center_matching() {
        let t = vec![truth("a", 39.0, 46.0, 0.0), truth("b", 40.0, 47.0, 0.1)];
        let s = vec![sample("top", None, 0.01, 39.0, 46.0), sample("top", None, 0.095, 40.0, 47.0)];
        let r = evaluate_run(&[], &s, &t, Matching::Auto).unwrap();
        assert_eq!(r.cameras[0].height.rmse_mm, 0.0);
        assert!(r.fused.is_none());
    }

    #[test]
    fn equidistant_is_ambiguous() {
        let t = vec![truth("a", 39.0, 46.0, 0.0), truth("b", 40.0, 47.0, 0.1)];
        let s = vec![sample("top", None, 0.05, 39.0, 46.0)];
        assert!(matches!(evaluate_run(&s, &s, &t, Matching::Auto), Err(EvalError::AmbiguousMatch { .. })));
    }

    #[test]
    fn unknown_fruit_id_is_unmatched() {
        let t = vec![truth("a", 39.0, 46.0, 0.0)];
        let s = vec![sample("top", Some("z"), 0.0, 39.0, 46.0)];
        assert!(matches!(evaluate_run(&s, &s, &t, Matching::Auto), Err(EvalError::UnmatchedMeasurement(_))));
        let s = vec![sample("top", None, 0.0, 39.0, 46.0)];
        assert!(matches!(evaluate_run(&s, &s, &t, Matching::FruitId), Err(EvalError::UnmatchedMeasurement(_))));
    }

    #[test]
    fn text_report_layout() {
        let t = vec![truth("a", 39.0, 46.0, 0.0)];
        let s = vec![sample("top", Some("a"), 0.0, 40.0, 46.0)];
        let text = render_text(&evaluate_run(&s, &s, &t, Matching::Auto).unwrap());
        assert!(text.starts_with("Top Camera | RMSE (mm) | Accuracy\nHeight     |    1.0000 | 0.9744\n"));
        assert!(text.contains("3-Camera Fill Ratio | RMSE (mm) | Accuracy"));
    }
}
