//! Instance-mask handling: RLE codec, kernel edge extraction, extreme
//! points and robust edge depth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DepthImage, Pixel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("run lengths sum to {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mask is empty")]
    EmptyMask,
    #[error("no valid depth: {invalid} of {total} edge pixels lack a depth sample")]
    NoValidDepth { invalid: usize, total: usize },
    #[error("mask buffer has {got} entries, expected {expected}")]
    BadBuffer { expected: usize, got: usize },
}

/// Row-major binary mask; `true` marks a fruit pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, MaskError> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(MaskError::BadBuffer { expected, got: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    /// Mask whose set pixels are those for which `f(u, v)` holds.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, u: u32, v: u32) -> bool {
        self.data[v as usize * self.width as usize + u as usize]
    }

    /// Like `get`, but anything outside the image reads as background.
    pub fn get_signed(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && u < self.width as i64 && v < self.height as i64 && self.get(u as u32, v as u32)
    }

    pub fn set(&mut self, u: u32, v: u32, value: bool) {
        self.data[v as usize * self.width as usize + u as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub fn bounding_box(&self) -> Option<BBox> {
        let mut it = self.pixels();
        let (u0, v0) = it.next()?;
        let (mut min_u, mut max_u, mut max_v) = (u0, u0, v0);
        for (u, v) in it {
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            max_v = v;
        }
        Some(BBox { x: min_u, y: v0, w: max_u - min_u + 1, h: max_v - v0 + 1 })
    }
}

/// Axis-aligned box `[x, y, w, h]` in pixels; `x, y` is the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for BBox {
    fn from(a: [u32; 4]) -> Self {
        BBox { x: a[0], y: a[1], w: a[2], h: a[3] }
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    /// Center in pixel-center coordinates.
    pub fn center(&self) -> Pixel {
        Pixel::new(
            self.x as f64 + (self.w as f64 - 1.0) / 2.0,
            self.y as f64 + (self.h as f64 - 1.0) / 2.0,
        )
    }

    /// Distance in pixels from the box to the nearest image border.
    pub fn edge_margin(&self, width: u32, height: u32) -> u32 {
        let right = width.saturating_sub(self.x + self.w);
        let bottom = height.saturating_sub(self.y + self.h);
        self.x.min(self.y).min(right).min(bottom)
    }
}

/// Uncompressed run-length encoding over the row-major pixel order. The first
/// count is the number of leading background pixels; runs then alternate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

pub fn decode_rle(counts: &[u32], height: u32, width: u32) -> Result<BinaryMask, MaskError> {
    let expected = height as usize * width as usize;
    let got: usize = counts.iter().map(|&c| c as usize).sum();
    if got != expected {
        return Err(MaskError::LengthMismatch { expected, got });
    }
    let mut data = Vec::with_capacity(expected);
    let mut value = false;
    for &c in counts {
        data.extend(std::iter::repeat(value).take(c as usize));
        value = !value;
    }
    Ok(BinaryMask { width, height, data })
}

pub fn encode_rle(mask: &BinaryMask) -> Rle {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for &b in &mask.data {
        if b == current {
            run += 1;
        } else {
            counts.push(run);
            current = b;
            run = 1;
        }
    }
    if run > 0 || counts.is_empty() {
        counts.push(run);
    }
    Rle { size: [mask.height, mask.width], counts }
}

impl Rle {
    pub fn decode(&self) -> Result<BinaryMask, MaskError> {
        decode_rle(&self.counts, self.size[0], self.size[1])
    }
}

/// Edge kernel: a pixel's response is `8·m(p) − Σ m(neighbors)`.
pub const EDGE_KERNEL: [[i32; 3]; 3] = [[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]];

/// Boundary pixels of a mask in row-major order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSet {
    pixels: Vec<(u32, u32)>,
}

impl EdgeSet {
    pub fn from_pixels(mut pixels: Vec<(u32, u32)>) -> Self {
        pixels.sort_unstable_by_key(|&(u, v)| (v, u));
        pixels.dedup();
        Self { pixels }
    }

    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        self.pixels.binary_search_by_key(&(v, u), |&(pu, pv)| (pv, pu)).is_ok()
    }

    pub fn points(&self) -> Vec<Pixel> {
        self.pixels.iter().map(|&(u, v)| Pixel::new(u as f64, v as f64)).collect()
    }
}

/// Convolves the {0,1} mask with [`EDGE_KERNEL`] (zero padding) and keeps
/// mask pixels with positive response.
pub fn extract_edges(m: &BinaryMask) -> EdgeSet {
    let mut pixels = Vec::new();
    for (u, v) in m.pixels() {
        let mut response = 0i32;
        for (dv, row) in EDGE_KERNEL.iter().enumerate() {
            for (du, &w) in row.iter().enumerate() {
                if m.get_signed(u as i64 + du as i64 - 1, v as i64 + dv as i64 - 1) {
                    response += w;
                }
            }
        }
        if response > 0 {
            pixels.push((u, v));
        }
    }
    EdgeSet { pixels }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoints {
    pub top: Pixel,
    pub bottom: Pixel,
    pub left: Pixel,
    pub right: Pixel,
}

/// Topmost, bottommost, leftmost and rightmost mask pixels.
///
/// Ties: top prefers smaller u, bottom larger u, left smaller v, right larger v.
pub fn extreme_points(m: &BinaryMask) -> Result<ExtremePoints, MaskError> {
    let mut it = m.pixels();
    let first = it.next().ok_or(MaskError::EmptyMask)?;
    // Row-major scan: the first pixel is the top, the last is the bottom.
    let top = first;
    let (mut bottom, mut left, mut right) = (first, first, first);
    for p @ (u, _) in it {
        bottom = p;
        if u < left.0 {
            left = p;
        }
        if u >= right.0 {
            right = p;
        }
    }
    let px = |(u, v): (u32, u32)| Pixel::new(u as f64, v as f64);
    Ok(ExtremePoints { top: px(top), bottom: px(bottom), left: px(left), right: px(right) })
}

/// Extreme points taken from the midpoints of a bounding box's sides.
pub fn bbox_extreme_points(b: &BBox) -> ExtremePoints {
    let c = b.center();
    ExtremePoints {
        top: Pixel::new(c.u, b.y as f64),
        bottom: Pixel::new(c.u, (b.y + b.h - 1) as f64),
        left: Pixel::new(b.x as f64, c.v),
        right: Pixel::new((b.x + b.w - 1) as f64, c.v),
    }
}

/// Default fraction of edge pixels allowed to lack depth.
pub const DEFAULT_INVALID_DEPTH_TOLERANCE: f64 = 0.5;

/// Lower median of the valid depths (meters) under the edge pixels.
///
/// Fails when more than `max_invalid_fraction` of the edge pixels have no
/// depth sample.
pub fn median_edge_depth(
    edges: &EdgeSet,
    depth: &DepthImage,
    max_invalid_fraction: f64,
) -> Result<f64, MaskError> {
    let total = edges.len();
    if total == 0 {
        return Err(MaskError::EmptyMask);
    }
    let mut samples: Vec<u16> = edges
        .pixels
        .iter()
        .filter_map(|&(u, v)| {
            if u < depth.width() && v < depth.height() {
                Some(depth.sample(u, v))
            } else {
                None
            }
        })
        .filter(|&s| s != 0)
        .collect();
    let invalid = total - samples.len();
    if samples.is_empty() || invalid as f64 > max_invalid_fraction * total as f64 {
        return Err(MaskError::NoValidDepth { invalid, total });
    }
    let mid = (samples.len() - 1) / 2;
    let (_, median, _) = samples.select_nth_unstable(mid);
    Ok(*median as f64 * depth.depth_scale())
}
