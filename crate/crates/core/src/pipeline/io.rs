//! On-disk formats: 16-bit PGM depth, JSON documents and the ground-truth CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::PipelineError;
use crate::evaluation::GroundTruthRecord;
use crate::formats::{DepthSidecar, GroundTruthRow};
use crate::geometry::{DepthImage, Point3};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> PipelineError {
    PipelineError::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(io_err(path))
}

/// Writes `bytes`, creating parent directories as needed.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| format_err(path, e.to_string()))
}

/// Pretty JSON with a trailing newline. Output depends only on `value`.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_bytes(path, &to_json_bytes(value))
}

/// Binary PGM, maxval 65535, big-endian samples.
pub fn encode_pgm16(width: u32, height: u32, samples: &[u16]) -> Vec<u8> {
    let header = format!("P5\n{width} {height}\n65535\n");
    let mut out = Vec::with_capacity(header.len() + samples.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Parses a binary PGM. Maxval up to 255 gives one byte per sample.
pub fn decode_pgm16(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>), String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header field")?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed header".into());
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    let n = w as usize * h as usize;
    let raster = &bytes[pos..];
    let samples = if maxval > 255 {
        if raster.len() < 2 * n {
            return Err(format!("expected {} raster bytes, found {}", 2 * n, raster.len()));
        }
        raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        if raster.len() < n {
            return Err(format!("expected {n} raster bytes, found {}", raster.len()));
        }
        raster[..n].iter().map(|&b| b as u16).collect()
    };
    Ok((w, h, samples))
}

/// Sidecar path next to a depth file: `x.depth.pgm` becomes `x.depth.json`.
pub fn sidecar_path(depth_path: &Path) -> PathBuf {
    depth_path.with_extension("json")
}

pub fn read_depth(path: &Path) -> Result<DepthImage, PipelineError> {
    let bytes = read_bytes(path)?;
    let (w, h, samples) = decode_pgm16(&bytes).map_err(|m| format_err(path, m))?;
    let sidecar: DepthSidecar = read_json(&sidecar_path(path))?;
    DepthImage::new(w, h, samples, sidecar.depth_scale).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_depth(path: &Path, depth: &DepthImage) -> Result<(), PipelineError> {
    write_bytes(path, &encode_pgm16(depth.width(), depth.height(), depth.data()))?;
    write_json(&sidecar_path(path), &DepthSidecar { depth_scale: depth.depth_scale() })
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>, PipelineError> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for row in reader.deserialize::<GroundTruthRow>() {
        let row = row.map_err(|e| format_err(path, e.to_string()))?;
        let center_world = match (row.x_m, row.y_m, row.z_m) {
            (Some(x), Some(y), Some(z)) => Some(Point3::new(x, y, z)),
            _ => None,
        };
        out.push(GroundTruthRecord {
            fruit_id: row.fruit_id,
            height_mm: row.height_mm,
            width_mm: row.width_mm,
            center_world,
        });
    }
    Ok(out)
}

pub fn ground_truth_csv(truth: &[GroundTruthRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in truth {
        let c = t.center_world;
        w.serialize(GroundTruthRow {
            fruit_id: t.fruit_id.clone(),
            height_mm: t.height_mm,
            width_mm: t.width_mm,
            x_m: c.map(|p| p.x),
            y_m: c.map(|p| p.y),
            z_m: c.map(|p| p.z),
        })
        .expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}
