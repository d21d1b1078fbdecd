//! Row-wise lane similarity.
//!
//! LaneIoU widens each lane per row by a tilt-aware virtual half-width and
//! integrates per-row intersections and unions; LineIoU is the constant-width
//! baseline that ignores tilt. Rows where both lanes exist contribute a signed
//! intersection (negative when the widened lanes do not overlap), rows where
//! only one lane exists contribute its full width to the union, and the score
//! is the ratio of the two sums, always in [-1, 1].

use crate::error::{Error, Result};
use crate::lane::{local_widths, Lane, RowGrid};
use crate::mat::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoUMode {
    /// Tilt-aware virtual widths.
    LaneIoU,
    /// Constant half-width `w_lane / 2` per side regardless of tilt.
    LineIoU,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoUConfig {
    /// Virtual lane width as a fraction of the reference width.
    pub w_lane: f64,
    pub mode: IoUMode,
    /// Clamp lane edges to [0, 1] before intersecting. Off by default (the
    /// assignment/loss convention); metric-side comparisons switch it on to
    /// mirror the rasterizer's image-border clipping.
    pub clip_to_image: bool,
}

impl IoUConfig {
    pub fn lane_iou(w_lane: f64) -> Self {
        Self { w_lane, mode: IoUMode::LaneIoU, clip_to_image: false }
    }

    pub fn line_iou(w_lane: f64) -> Self {
        Self { w_lane, mode: IoUMode::LineIoU, clip_to_image: false }
    }

    pub fn with_clip(mut self, clip: bool) -> Self {
        self.clip_to_image = clip;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.w_lane > 0.0 && self.w_lane.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "w_lane {} must be positive",
                self.w_lane
            )));
        }
        Ok(())
    }
}

/// Dense predictions x ground-truths similarity matrix.
///
/// Pairs with undefined IoU hold the sentinel -1, the minimum possible score,
/// so downstream argmax and matching never select them.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUMatrix {
    values: DenseMatrix,
    mode: IoUMode,
}

pub const UNDEFINED_IOU: f64 = -1.0;

impl IoUMatrix {
    pub fn n_preds(&self) -> usize {
        self.values.rows()
    }

    pub fn n_gts(&self) -> usize {
        self.values.cols()
    }

    /// Similarity of prediction `j` against ground truth `i`.
    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values.get(j, i)
    }

    pub fn mode(&self) -> IoUMode {
        self.mode
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }
}

fn half_widths(lane: &Lane, grid: &RowGrid, cfg: &IoUConfig) -> Result<Vec<f64>> {
    match cfg.mode {
        IoUMode::LaneIoU => local_widths(lane, grid, cfg.w_lane),
        IoUMode::LineIoU => {
            let mut w = vec![0.0; lane.n_rows()];
            for (i, v) in lane.valid().iter().enumerate() {
                if *v {
                    w[i] = 0.5 * cfg.w_lane;
                }
            }
            Ok(w)
        }
    }
}

#[inline]
fn edges(x: f64, w: f64, clip: bool) -> (f64, f64) {
    if clip {
        ((x - w).clamp(0.0, 1.0), (x + w).clamp(0.0, 1.0))
    } else {
        (x - w, x + w)
    }
}

fn checked_run(lane: &Lane) -> Result<(usize, usize)> {
    match lane.valid_run() {
        Some((first, last)) if last > first => Ok((first, last)),
        Some(_) => Err(Error::UndefinedIoU),
        None => Err(Error::UndefinedIoU),
    }
}

fn accumulate(p: &Lane, q: &Lane, wp: &[f64], wq: &[f64], clip: bool) -> (f64, f64) {
    let mut sum_i = 0.0;
    let mut sum_u = 0.0;
    for row in 0..p.n_rows() {
        match (p.is_valid(row), q.is_valid(row)) {
            (true, true) => {
                let (lp, rp) = edges(p.xs()[row], wp[row], clip);
                let (lq, rq) = edges(q.xs()[row], wq[row], clip);
                sum_i += rp.min(rq) - lp.max(lq);
                sum_u += rp.max(rq) - lp.min(lq);
            }
            (true, false) => {
                let (lp, rp) = edges(p.xs()[row], wp[row], clip);
                sum_u += rp - lp;
            }
            (false, true) => {
                let (lq, rq) = edges(q.xs()[row], wq[row], clip);
                sum_u += rq - lq;
            }
            (false, false) => {}
        }
    }
    (sum_i, sum_u)
}

/// Row-wise IoU between two lanes under the configured width model.
pub fn lane_iou(p: &Lane, q: &Lane, grid: &RowGrid, cfg: &IoUConfig) -> Result<f64> {
    cfg.validate()?;
    if p.n_rows() != grid.n_rows() || q.n_rows() != grid.n_rows() {
        return Err(Error::InvalidConfig("lane rows do not match the grid".into()));
    }
    checked_run(p)?;
    checked_run(q)?;
    let wp = half_widths(p, grid, cfg)?;
    let wq = half_widths(q, grid, cfg)?;
    let (sum_i, sum_u) = accumulate(p, q, &wp, &wq, cfg.clip_to_image);
    if sum_u <= 0.0 {
        return Err(Error::UndefinedIoU);
    }
    Ok(sum_i / sum_u)
}

/// Row-wise IoU with externally supplied per-row half-widths.
///
/// This is the function `lane_iou_grad` differentiates: widths are frozen
/// (computed once from the undisturbed lanes) while the x coordinates vary.
/// Loss implementations use it to keep the width stop-gradient explicit.
pub fn lane_iou_given_widths(
    p: &Lane,
    q: &Lane,
    wp: &[f64],
    wq: &[f64],
    clip_to_image: bool,
) -> Result<f64> {
    if wp.len() != p.n_rows() || wq.len() != q.n_rows() || p.n_rows() != q.n_rows() {
        return Err(Error::InvalidConfig("width arrays do not match the lanes".into()));
    }
    checked_run(p)?;
    checked_run(q)?;
    let (sum_i, sum_u) = accumulate(p, q, wp, wq, clip_to_image);
    if sum_u <= 0.0 {
        return Err(Error::UndefinedIoU);
    }
    Ok(sum_i / sum_u)
}

/// Pairwise similarity matrix; per-pair failures become the -1 sentinel.
pub fn iou_matrix(preds: &[Lane], gts: &[Lane], grid: &RowGrid, cfg: &IoUConfig) -> IoUMatrix {
    let values = DenseMatrix::from_fn(preds.len(), gts.len(), |j, i| {
        lane_iou(&preds[j], &gts[i], grid, cfg).unwrap_or(UNDEFINED_IOU)
    });
    IoUMatrix { values, mode: cfg.mode }
}

/// Subgradient weight carried by `a` in `min(a, b)`; exact ties split evenly.
#[inline]
fn min_weight(a: f64, b: f64) -> f64 {
    if a < b {
        1.0
    } else if a > b {
        0.0
    } else {
        0.5
    }
}

/// Analytic subgradient of `lane_iou(p, q)` with respect to each `x_i` of `p`.
///
/// Widths are treated as locally constant (no gradient through the tilt
/// compensation), matching how the constant-width baseline differentiates
/// only the lane edges. Away from min/max ties the result equals the true
/// derivative; at exact ties the subgradient splits evenly so an identical
/// pair has zero gradient. Rows where `p` is invalid hold 0.
pub fn lane_iou_grad(p: &Lane, q: &Lane, grid: &RowGrid, cfg: &IoUConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if p.n_rows() != grid.n_rows() || q.n_rows() != grid.n_rows() {
        return Err(Error::InvalidConfig("lane rows do not match the grid".into()));
    }
    checked_run(p)?;
    checked_run(q)?;
    let wp = half_widths(p, grid, cfg)?;
    let wq = half_widths(q, grid, cfg)?;

    let n = grid.n_rows();
    let mut sum_i = 0.0;
    let mut sum_u = 0.0;
    // Per-row derivative of the intersection and union sums w.r.t. x_i of p.
    let mut d_i = vec![0.0; n];
    let mut d_u = vec![0.0; n];

    for row in 0..n {
        match (p.is_valid(row), q.is_valid(row)) {
            (true, true) => {
                let x = p.xs()[row];
                let w = wp[row];
                let (lp, rp) = edges(x, w, cfg.clip_to_image);
                let (lq, rq) = edges(q.xs()[row], wq[row], cfg.clip_to_image);
                // d(edge)/dx is 0 where the clamp is active.
                let g_r = if cfg.clip_to_image && (x + w < 0.0 || x + w > 1.0) { 0.0 } else { 1.0 };
                let g_l = if cfg.clip_to_image && (x - w < 0.0 || x - w > 1.0) { 0.0 } else { 1.0 };
                sum_i += rp.min(rq) - lp.max(lq);
                sum_u += rp.max(rq) - lp.min(lq);
                d_i[row] = g_r * min_weight(rp, rq) - g_l * min_weight(lq, lp);
                d_u[row] = g_r * min_weight(rq, rp) - g_l * min_weight(lp, lq);
            }
            (true, false) => {
                let x = p.xs()[row];
                let w = wp[row];
                let (lp, rp) = edges(x, w, cfg.clip_to_image);
                let g_r = if cfg.clip_to_image && (x + w < 0.0 || x + w > 1.0) { 0.0 } else { 1.0 };
                let g_l = if cfg.clip_to_image && (x - w < 0.0 || x - w > 1.0) { 0.0 } else { 1.0 };
                sum_u += rp - lp;
                d_u[row] = g_r - g_l;
            }
            (false, true) => {
                let (lq, rq) = edges(q.xs()[row], wq[row], cfg.clip_to_image);
                sum_u += rq - lq;
            }
            (false, false) => {}
        }
    }
    if sum_u <= 0.0 {
        return Err(Error::UndefinedIoU);
    }

    let mut grad = vec![0.0; n];
    let u2 = sum_u * sum_u;
    for row in 0..n {
        if p.is_valid(row) {
            grad[row] = (d_i[row] * sum_u - sum_i * d_u[row]) / u2;
        }
    }
    Ok(grad)
}

/// IoU loss value `1 - lane_iou` together with its gradient w.r.t. `p`'s xs.
pub fn lane_iou_loss(
    p: &Lane,
    q: &Lane,
    grid: &RowGrid,
    cfg: &IoUConfig,
) -> Result<(f64, Vec<f64>)> {
    let value = 1.0 - lane_iou(p, q, grid, cfg)?;
    let mut grad = lane_iou_grad(p, q, grid, cfg)?;
    for g in &mut grad {
        *g = -*g;
    }
    Ok((value, grad))
}
