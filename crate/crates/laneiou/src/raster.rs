//! Segmentation-mask ground truth for the benchmark metric.
//!
//! Lanes are drawn as fixed-width polyline strokes into a binary bitmap at
//! the benchmark resolution and compared by pixel IoU. A pixel is covered
//! when the distance from its integer-coordinate center to the polyline is
//! strictly below half the stroke width, which yields round caps and joins.
//! No anti-aliasing; output is deterministic and platform-independent.
//! Strokes are clipped to the image after widening.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lane::{Lane, RowGrid};

/// Stroke width and resolution of the benchmark masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpec {
    width_px: u32,
    resolution: (u32, u32),
}

impl MaskSpec {
    pub fn new(width_px: u32, resolution: (u32, u32)) -> Result<Self> {
        if width_px < 1 {
            return Err(Error::InvalidConfig("stroke width must be >= 1 px".into()));
        }
        if resolution.0 < 1 || resolution.1 < 1 {
            return Err(Error::InvalidConfig("mask resolution must be positive".into()));
        }
        Ok(Self { width_px, resolution })
    }

    /// CULane metric: 30 px strokes at 1640x590.
    pub fn culane() -> Self {
        Self { width_px: 30, resolution: (1640, 590) }
    }

    /// CurveLanes metric: 5 px strokes at 224x224.
    pub fn curvelanes() -> Self {
        Self { width_px: 5, resolution: (224, 224) }
    }

    pub fn width_px(&self) -> u32 {
        self.width_px
    }

    pub fn resolution(&self) -> (u32, u32) {
        self.resolution
    }

    /// Same stroke geometry at `factor` times the resolution.
    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            width_px: self.width_px * factor,
            resolution: (self.resolution.0 * factor, self.resolution.1 * factor),
        }
    }
}

/// Binary bitmap with bit-packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneMask {
    width: u32,
    height: u32,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl LaneMask {
    pub fn empty(spec: &MaskSpec) -> Self {
        let (width, height) = spec.resolution;
        let words_per_row = (width as usize).div_ceil(64);
        Self { width, height, words_per_row, bits: vec![0; words_per_row * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let idx = y as usize * self.words_per_row + (x as usize >> 6);
        self.bits[idx] >> (x & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, x: u32, y: u32) {
        let idx = y as usize * self.words_per_row + (x as usize >> 6);
        self.bits[idx] |= 1u64 << (x & 63);
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Number of set pixels in row `y`; helper for stroke-geometry checks.
    pub fn row_count(&self, y: u32) -> u32 {
        let start = y as usize * self.words_per_row;
        self.bits[start..start + self.words_per_row]
            .iter()
            .map(|w| w.count_ones())
            .sum()
    }
}

/// Pixel IoU of two masks: |a AND b| / |a OR b|.
pub fn mask_iou(a: &LaneMask, b: &LaneMask) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ResolutionMismatch {
            a: (a.width, a.height),
            b: (b.width, b.height),
        });
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (wa, wb) in a.bits.iter().zip(&b.bits) {
        inter += (wa & wb).count_ones() as u64;
        union += (wa | wb).count_ones() as u64;
    }
    if union == 0 {
        return Err(Error::EmptyMasks);
    }
    Ok(inter as f64 / union as f64)
}

#[inline]
fn dist2_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    (px - cx) * (px - cx) + (py - cy) * (py - cy)
}

/// Draws the lane's valid points as a stroked polyline into a fresh mask.
///
/// Lanes entirely outside the image produce an empty mask.
pub fn rasterize(lane: &Lane, grid: &RowGrid, spec: &MaskSpec) -> Result<LaneMask> {
    let (first, last) = lane.valid_run().ok_or(Error::DegenerateLane { valid_rows: 0 })?;
    if last == first {
        return Err(Error::DegenerateLane { valid_rows: 1 });
    }
    let (w, h) = spec.resolution;
    let (wf, hf) = (w as f64, h as f64);
    let pts: Vec<(f64, f64)> = (first..=last)
        .map(|i| (lane.xs()[i] * wf, grid.row_y_norm(i) * hf))
        .collect();

    let r = spec.width_px as f64 / 2.0;
    let r2 = r * r;
    let mut mask = LaneMask::empty(spec);
    for seg in pts.windows(2) {
        let (ax, ay) = seg[0];
        let (bx, by) = seg[1];
        let x_lo = (ax.min(bx) - r).floor().max(0.0) as i64;
        let x_hi = (ax.max(bx) + r).ceil().min(wf - 1.0) as i64;
        let y_lo = (ay.min(by) - r).floor().max(0.0) as i64;
        let y_hi = (ay.max(by) + r).ceil().min(hf - 1.0) as i64;
        if x_lo > x_hi || y_lo > y_hi {
            continue;
        }
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                if dist2_to_segment(x as f64, y as f64, ax, ay, bx, by) < r2 {
                    mask.set(x as u32, y as u32);
                }
            }
        }
    }
    Ok(mask)
}

/// Writes the mask as a binary PGM (P5, maxval 255, 0 = background,
/// 255 = stroke), row-major top to bottom.
pub fn write_pgm<W: Write>(mask: &LaneMask, out: &mut W) -> std::io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", mask.width, mask.height)?;
    let mut row = vec![0u8; mask.width as usize];
    for y in 0..mask.height {
        for (x, px) in row.iter_mut().enumerate() {
            *px = if mask.get(x as u32, y) { 255 } else { 0 };
        }
        out.write_all(&row)?;
    }
    Ok(())
}
