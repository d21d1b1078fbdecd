//! Synthetic lane generation and desk-scale analysis harnesses: oracle
//! experiments (replacing prediction components with ground-truth-derived
//! values), the similarity-vs-metric correlation study, and generators for
//! assignment-homogeneity statistics.
//!
//! Generation is a pure function of the configuration: every frame derives
//! its own RNG from the seed and frame index, so parallel generation equals
//! serial generation bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, EvalReport, Frame};
use crate::iou::{lane_iou, IoUConfig};
use crate::lane::{fit_anchor, render_anchor, Lane, RowGrid, INVALID_X};
use crate::raster::{mask_iou, rasterize, LaneMask, MaskSpec};

/// SplitMix64 finalizer; derives stream-specific seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_frames: usize,
    /// Frames per synthetic video; videos group frames for cross-validation.
    pub frames_per_video: usize,
    /// Inclusive range of ground-truth lanes per frame.
    pub lanes_per_frame: (usize, usize),
    /// Ground-truth angle range in degrees (90 = vertical).
    pub angle_range_deg: (f64, f64),
    /// Quadratic curvature range, normalized x per squared normalized height.
    pub curvature_range: (f64, f64),
    /// Std dev of the prediction start-x jitter, normalized width units.
    pub x_jitter: f64,
    /// Std dev of the prediction angle jitter in degrees.
    pub angle_jitter_deg: f64,
    /// Std dev of the relative length jitter.
    pub length_jitter: f64,
    /// Std dev of the Gaussian noise added to the true mask IoU to form the
    /// prediction confidence. Zero makes confidences exactly the metric IoU.
    pub conf_noise: f64,
    /// Expected number of spurious (false-positive) lanes per frame.
    pub fp_rate: f64,
    /// Resolution/width used to compute the true mask IoU for confidences.
    pub mask_spec: MaskSpec,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let ok_range = |r: (f64, f64)| r.0 <= r.1 && r.0.is_finite() && r.1.is_finite();
        if self.lanes_per_frame.0 > self.lanes_per_frame.1 {
            return Err(Error::InvalidConfig("empty lanes_per_frame range".into()));
        }
        if !ok_range(self.angle_range_deg)
            || self.angle_range_deg.0 <= 0.0
            || self.angle_range_deg.1 >= 180.0
        {
            return Err(Error::InvalidConfig("angle range must lie inside (0, 180)".into()));
        }
        if !ok_range(self.curvature_range) {
            return Err(Error::InvalidConfig("empty curvature range".into()));
        }
        if self.frames_per_video == 0 {
            return Err(Error::InvalidConfig("frames_per_video must be >= 1".into()));
        }
        for (name, v) in [
            ("x_jitter", self.x_jitter),
            ("angle_jitter_deg", self.angle_jitter_deg),
            ("length_jitter", self.length_jitter),
            ("conf_noise", self.conf_noise),
            ("fp_rate", self.fp_rate),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_frames: 60,
            frames_per_video: 4,
            lanes_per_frame: (2, 4),
            angle_range_deg: (25.0, 155.0),
            curvature_range: (-0.15, 0.15),
            x_jitter: 0.01,
            angle_jitter_deg: 2.0,
            length_jitter: 0.05,
            conf_noise: 0.2,
            fp_rate: 1.0,
            mask_spec: MaskSpec::culane(),
        }
    }
}

fn sample_normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
    }
}

/// Quadratic ground-truth lane: straight ray at `theta` from the bottom
/// anchor plus a curvature term, sampled over `rows`.
fn curved_lane(
    grid: &RowGrid,
    theta_deg: f64,
    x0: f64,
    curvature: f64,
    top_row: usize,
    bottom_row: usize,
) -> Result<Lane> {
    let w = grid.ref_width();
    let h = grid.ref_height();
    let cot = theta_deg.to_radians().cos() / theta_deg.to_radians().sin();
    let y_bottom = grid.row_y_px(bottom_row);
    let n = grid.n_rows();
    let mut xs = vec![INVALID_X; n];
    let mut valid = vec![false; n];
    for row in top_row..=bottom_row {
        let up_px = y_bottom - grid.row_y_px(row);
        let up_norm = up_px / h;
        xs[row] = x0 + cot * up_px / w + curvature * up_norm * up_norm;
        valid[row] = true;
    }
    Lane::new(xs, valid, 1.0)
}

/// Start-x interval keeping the straight component inside `[margin, 1-margin]`
/// at both ends; falls back to a fixed central band when infeasible.
fn feasible_x0(cot: f64, dy_px: f64, width_px: f64, margin: f64) -> (f64, f64) {
    let travel = cot * dy_px / width_px;
    let lo = margin.max(margin - travel);
    let hi = (1.0 - margin).min(1.0 - margin - travel);
    if lo < hi {
        (lo, hi)
    } else {
        (0.35, 0.65)
    }
}

fn gen_gt_lane(rng: &mut ChaCha8Rng, cfg: &SynthConfig, grid: &RowGrid, slot_x: f64) -> Result<Lane> {
    let n = grid.n_rows();
    let theta = rng.random_range(cfg.angle_range_deg.0..=cfg.angle_range_deg.1);
    let curvature = rng.random_range(cfg.curvature_range.0..=cfg.curvature_range.1);
    let bottom_row = n - 1 - rng.random_range(0..n / 8);
    let min_span = (n / 3).max(2);
    let top_row = bottom_row - rng.random_range(min_span..=bottom_row.max(min_span));
    // Cap the vertical span so the straight part does not travel more than
    // ~0.6 of the width (tilted lanes are shorter in the image).
    let cot = theta.to_radians().cos() / theta.to_radians().sin();
    let mut top = top_row;
    if cot.abs() > 1e-9 {
        let max_dy = 0.6 * grid.ref_width() / cot.abs();
        while top < bottom_row.saturating_sub(min_span)
            && grid.row_y_px(bottom_row) - grid.row_y_px(top) > max_dy
        {
            top += 1;
        }
    }
    let dy_px = grid.row_y_px(bottom_row) - grid.row_y_px(top);
    let (lo, hi) = feasible_x0(cot, dy_px, grid.ref_width(), 0.08);
    let x0 = (slot_x + rng.random_range(-0.06..0.06)).clamp(lo, hi);
    curved_lane(grid, theta, x0, curvature, top, bottom_row)
}

fn perturb_prediction(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    grid: &RowGrid,
    gt: &Lane,
) -> Option<Lane> {
    let mut params = fit_anchor(gt, grid).ok()?;
    params.theta_a = (params.theta_a + sample_normal(rng, cfg.angle_jitter_deg)).clamp(5.0, 175.0);
    params.x_a += sample_normal(rng, cfg.x_jitter);
    params.length = (params.length * (1.0 + sample_normal(rng, cfg.length_jitter))).max(0.05);
    render_anchor(&params, grid).ok()
}

fn gen_frame(cfg: &SynthConfig, grid: &RowGrid, frame_idx: usize) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, frame_idx as u64));
    let n_lanes = rng.random_range(cfg.lanes_per_frame.0..=cfg.lanes_per_frame.1);

    let mut gts = Vec::with_capacity(n_lanes);
    for lane_idx in 0..n_lanes {
        let slot_x = (lane_idx + 1) as f64 / (n_lanes + 1) as f64;
        gts.push(gen_gt_lane(&mut rng, cfg, grid, slot_x)?);
    }

    let mut preds: Vec<Lane> = Vec::new();
    for gt in &gts {
        if let Some(p) = perturb_prediction(&mut rng, cfg, grid, gt) {
            preds.push(p);
        }
    }
    if cfg.fp_rate > 0.0 {
        let n_fp = Poisson::new(cfg.fp_rate).expect("validated rate").sample(&mut rng) as usize;
        for _ in 0..n_fp {
            let slot_x = rng.random_range(0.1..0.9);
            if let Ok(lane) = gen_gt_lane(&mut rng, cfg, grid, slot_x) {
                preds.push(lane);
            }
        }
    }

    // Confidence model: true metric IoU plus Gaussian noise.
    let gt_masks: Vec<LaneMask> = gts
        .iter()
        .map(|l| rasterize(l, grid, &cfg.mask_spec).unwrap_or_else(|_| LaneMask::empty(&cfg.mask_spec)))
        .collect();
    for pred in &mut preds {
        let best = match rasterize(pred, grid, &cfg.mask_spec) {
            Ok(pm) => gt_masks
                .iter()
                .map(|gm| mask_iou(&pm, gm).unwrap_or(0.0))
                .fold(0.0f64, f64::max),
            Err(_) => 0.0,
        };
        let conf = (best + sample_normal(&mut rng, cfg.conf_noise)).clamp(0.0, 1.0);
        pred.set_confidence(conf);
    }

    let video = frame_idx / cfg.frames_per_video;
    Ok(Frame {
        id: format!("synthetic/{video:04}/{:05}.jpg", frame_idx % cfg.frames_per_video),
        video: format!("synthetic/{video:04}"),
        category: None,
        gts,
        preds,
    })
}

/// Generates ground-truth lanes (quadratic curves) and predictions (perturbed
/// ground truths plus spurious lanes) with confidences that track the metric
/// IoU up to the configured noise.
pub fn generate(cfg: &SynthConfig, grid: &RowGrid) -> Result<Vec<Frame>> {
    cfg.validate()?;
    (0..cfg.n_frames)
        .into_par_iter()
        .map(|f| gen_frame(cfg, grid, f))
        .collect()
}

/// Anchor/GT set for assignment-homogeneity statistics: straight ground
/// truths at angles uniform over the range, each surrounded by anchors at
/// fixed PERPENDICULAR pixel offsets (so the anchor distribution is isotropic
/// in the image plane rather than in row space).
pub fn generate_isotropic_assignment_set(
    seed: u64,
    n_frames: usize,
    gts_per_frame: usize,
    angle_range_deg: (f64, f64),
    perp_offsets_px: &[f64],
    grid: &RowGrid,
) -> Result<Vec<Frame>> {
    if perp_offsets_px.is_empty() {
        return Err(Error::EmptyInput("perpendicular offsets"));
    }
    (0..n_frames)
        .into_par_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, f as u64));
            let n = grid.n_rows();
            let mut gts = Vec::with_capacity(gts_per_frame);
            let mut preds = Vec::new();
            for g in 0..gts_per_frame {
                let theta = rng.random_range(angle_range_deg.0..=angle_range_deg.1);
                let sin_t = theta.to_radians().sin();
                let cot = theta.to_radians().cos() / sin_t;
                let bottom = n - 1;
                let mut top = n / 6;
                if cot.abs() > 1e-9 {
                    let max_dy = 0.55 * grid.ref_width() / cot.abs();
                    while top < bottom - 2
                        && grid.row_y_px(bottom) - grid.row_y_px(top) > max_dy
                    {
                        top += 1;
                    }
                }
                let dy_px = grid.row_y_px(bottom) - grid.row_y_px(top);
                let (lo, hi) = feasible_x0(cot, dy_px, grid.ref_width(), 0.1);
                let slot = (g + 1) as f64 / (gts_per_frame + 1) as f64;
                let x0 = (lo + slot * (hi - lo)).clamp(lo, hi);
                let gt = curved_lane(grid, theta, x0, 0.0, top, bottom)?;
                for &perp in perp_offsets_px {
                    // Perpendicular offset -> horizontal offset grows as the
                    // lane tilts.
                    let d_norm = perp / sin_t / grid.ref_width();
                    let conf = (1.0 - perp.abs() / 25.0 + rng.random_range(-0.05..0.05))
                        .clamp(0.01, 0.99);
                    preds.push(gt.shifted(d_norm).with_confidence(conf));
                }
                gts.push(gt);
            }
            Ok(Frame {
                id: format!("iso/{f:04}/00000.jpg"),
                video: format!("iso/{f:04}"),
                category: None,
                gts,
                preds,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Replace prediction confidences with their max mask IoU over the GTs.
    Confidence,
    /// Replace the fitted start point and angle with the best-overlap GT's,
    /// keeping the prediction's per-row residuals and length.
    Anchor,
    /// Replace only the length with the best-overlap GT's.
    Length,
}

/// Applies the oracle replacement to every prediction. Predictions without
/// any overlapping GT are left unchanged (except in confidence mode, where
/// the confidence becomes 0).
pub fn apply_oracle(
    frames: &[Frame],
    mode: OracleMode,
    grid: &RowGrid,
    mask_spec: &MaskSpec,
) -> Vec<Frame> {
    frames
        .par_iter()
        .map(|frame| {
            let gt_masks: Vec<LaneMask> = frame
                .gts
                .iter()
                .map(|l| rasterize(l, grid, mask_spec).unwrap_or_else(|_| LaneMask::empty(mask_spec)))
                .collect();
            let preds = frame
                .preds
                .iter()
                .map(|pred| {
                    let best: Option<(usize, f64)> = match rasterize(pred, grid, mask_spec) {
                        Ok(pm) => {
                            let mut best = None;
                            for (i, gm) in gt_masks.iter().enumerate() {
                                let v = mask_iou(&pm, gm).unwrap_or(0.0);
                                if best.is_none_or(|(_, bv)| v > bv) {
                                    best = Some((i, v));
                                }
                            }
                            best
                        }
                        Err(_) => None,
                    };
                    match mode {
                        OracleMode::Confidence => {
                            let iou = best.map(|(_, v)| v).unwrap_or(0.0);
                            pred.clone().with_confidence(iou)
                        }
                        OracleMode::Anchor | OracleMode::Length => {
                            let Some((gt_idx, v)) = best else { return pred.clone() };
                            if v <= 0.0 {
                                return pred.clone();
                            }
                            let (Ok(pf), Ok(gf)) = (
                                fit_anchor(pred, grid),
                                fit_anchor(&frame.gts[gt_idx], grid),
                            ) else {
                                return pred.clone();
                            };
                            let params = match mode {
                                OracleMode::Anchor => crate::lane::AnchorParams {
                                    x_a: gf.x_a,
                                    y_a: gf.y_a,
                                    theta_a: gf.theta_a,
                                    length: pf.length,
                                    dx: pf.dx,
                                },
                                _ => crate::lane::AnchorParams {
                                    length: gf.length,
                                    ..pf
                                },
                            };
                            match render_anchor(&params, grid) {
                                Ok(lane) => lane.with_confidence(pred.confidence()),
                                Err(_) => pred.clone(),
                            }
                        }
                    }
                })
                .collect();
            Frame { preds, ..frame.clone() }
        })
        .collect()
}

/// Evaluates the dataset after replacing one prediction component with its
/// ground-truth-derived value, bounding that component's contribution to F1.
pub fn oracle_experiment(
    frames: &[Frame],
    mode: OracleMode,
    grid: &RowGrid,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let modified = apply_oracle(frames, mode, grid, &cfg.mask_spec);
    evaluate(&modified, grid, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    pub angle_deg: f64,
    pub mask_iou: f64,
    pub lane_iou: f64,
    pub line_iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationStudy {
    pub rows: Vec<CorrelationRow>,
    pub pearson_lane: f64,
    pub pearson_line: f64,
    /// Pairs skipped for undefined IoU.
    pub skipped: usize,
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Per-pair (LaneIoU, LineIoU, mask IoU) triples and the Pearson correlation
/// of each row-wise similarity against the mask IoU. Pairs are (prediction,
/// ground truth); the angle column is the GT's fitted angle.
pub fn correlation_study(
    pairs: &[(Lane, Lane)],
    grid: &RowGrid,
    w_lane: f64,
    mask_spec: &MaskSpec,
) -> Result<CorrelationStudy> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("lane pairs"));
    }
    let lane_cfg = IoUConfig::lane_iou(w_lane).with_clip(true);
    let line_cfg = IoUConfig::line_iou(w_lane).with_clip(true);
    let computed: Vec<Option<CorrelationRow>> = pairs
        .par_iter()
        .map(|(p, q)| {
            let angle = fit_anchor(q, grid).ok()?.theta_a;
            let lane_v = lane_iou(p, q, grid, &lane_cfg).ok()?;
            let line_v = lane_iou(p, q, grid, &line_cfg).ok()?;
            let pm = rasterize(p, grid, mask_spec).ok()?;
            let qm = rasterize(q, grid, mask_spec).ok()?;
            let mask_v = mask_iou(&pm, &qm).ok()?;
            Some(CorrelationRow { angle_deg: angle, mask_iou: mask_v, lane_iou: lane_v, line_iou: line_v })
        })
        .collect();
    let skipped = computed.iter().filter(|r| r.is_none()).count();
    let rows: Vec<CorrelationRow> = computed.into_iter().flatten().collect();
    if rows.len() < 2 {
        return Err(Error::EmptyInput("defined IoU pairs"));
    }
    let mask: Vec<f64> = rows.iter().map(|r| r.mask_iou).collect();
    let lane: Vec<f64> = rows.iter().map(|r| r.lane_iou).collect();
    let line: Vec<f64> = rows.iter().map(|r| r.line_iou).collect();
    Ok(CorrelationStudy {
        pearson_lane: pearson(&lane, &mask),
        pearson_line: pearson(&line, &mask),
        rows,
        skipped,
    })
}

/// CSV with columns `angle_deg,mask_iou,lane_iou,line_iou`.
pub fn correlation_to_csv(study: &CorrelationStudy) -> String {
    let mut out = String::from("angle_deg,mask_iou,lane_iou,line_iou\n");
    for r in &study.rows {
        out.push_str(&format!(
            "{:.9},{:.9},{:.9},{:.9}\n",
            r.angle_deg, r.mask_iou, r.lane_iou, r.line_iou
        ));
    }
    out
}

/// Straight (prediction, GT) pairs: full-height GT at a uniform angle, the
/// prediction parallel-shifted by a uniform perpendicular offset. Pairs stay
/// fully inside the frame whenever the angle allows it.
pub fn generate_straight_pairs(
    seed: u64,
    n_pairs: usize,
    angle_range_deg: (f64, f64),
    max_perp_offset_px: f64,
    grid: &RowGrid,
) -> Vec<(Lane, Lane)> {
    (0..n_pairs)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64));
            let theta = rng.random_range(angle_range_deg.0..=angle_range_deg.1);
            straight_pair_at(&mut rng, theta, max_perp_offset_px, grid)
        })
        .collect()
}

fn straight_pair_at(
    rng: &mut ChaCha8Rng,
    theta: f64,
    max_perp_offset_px: f64,
    grid: &RowGrid,
) -> (Lane, Lane) {
    let sin_t = theta.to_radians().sin();
    let cot = theta.to_radians().cos() / sin_t;
    let n = grid.n_rows();
    let dy_px = grid.row_y_px(n - 1) - grid.row_y_px(0);
    let margin = (max_perp_offset_px / sin_t + 40.0) / grid.ref_width();
    let (lo, hi) = feasible_x0(cot, dy_px, grid.ref_width(), margin);
    let x0 = rng.random_range(lo..hi);
    let gt = curved_lane(grid, theta, x0, 0.0, 0, n - 1).expect("straight lane");
    let perp = rng.random_range(-max_perp_offset_px..=max_perp_offset_px);
    let pred = gt.shifted(perp / sin_t / grid.ref_width());
    (pred, gt)
}

/// A single pair at an exact angle and perpendicular offset; used to pin
/// specific comparison points (e.g. 45-degree pairs).
pub fn straight_pair(
    seed: u64,
    theta_deg: f64,
    perp_offset_px: f64,
    grid: &RowGrid,
) -> (Lane, Lane) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sin_t = theta_deg.to_radians().sin();
    let cot = theta_deg.to_radians().cos() / sin_t;
    let n = grid.n_rows();
    let dy_px = grid.row_y_px(n - 1) - grid.row_y_px(0);
    let margin = (perp_offset_px.abs() / sin_t + 40.0) / grid.ref_width();
    let (lo, hi) = feasible_x0(cot, dy_px, grid.ref_width(), margin);
    let x0 = rng.random_range(lo..hi);
    let gt = curved_lane(grid, theta_deg, x0, 0.0, 0, n - 1).expect("straight lane");
    let pred = gt.shifted(perp_offset_px / sin_t / grid.ref_width());
    (pred, gt)
}

/// Pairs for the correlation study: angles spanning the range, perpendicular
/// offsets up to ~0.9 of the stroke width, mild curvature and span variation.
pub fn generate_correlation_pairs(
    seed: u64,
    n_pairs: usize,
    angle_range_deg: (f64, f64),
    w_lane_px: f64,
    grid: &RowGrid,
) -> Vec<(Lane, Lane)> {
    (0..n_pairs)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64));
            let theta = rng.random_range(angle_range_deg.0..=angle_range_deg.1);
            let sin_t = theta.to_radians().sin();
            let cot = theta.to_radians().cos() / sin_t;
            let n = grid.n_rows();
            let bottom = n - 1;
            let mut top = rng.random_range(0..n / 4);
            if cot.abs() > 1e-9 {
                let max_dy = 0.6 * grid.ref_width() / cot.abs();
                while top < bottom - n / 3
                    && grid.row_y_px(bottom) - grid.row_y_px(top) > max_dy
                {
                    top += 1;
                }
            }
            let dy_px = grid.row_y_px(bottom) - grid.row_y_px(top);
            let margin = (w_lane_px + 40.0) / grid.ref_width();
            let (lo, hi) = feasible_x0(cot, dy_px, grid.ref_width(), margin);
            let x0 = rng.random_range(lo..hi);
            let curvature = rng.random_range(-0.1..0.1);
            let gt = curved_lane(grid, theta, x0, curvature, top, bottom).expect("gt lane");

            let perp = rng.random_range(0.0..0.9 * w_lane_px);
            let sign = if rng.random_range(0.0..1.0f64) < 0.5 { -1.0 } else { 1.0 };
            let mut pred = gt.shifted(sign * perp / sin_t / grid.ref_width());
            // Occasionally trim the prediction's top to vary the shared span.
            if rng.random_range(0.0..1.0f64) < 0.3 {
                let (first, last) = pred.valid_run().unwrap();
                let span = last - first;
                let cut = rng.random_range(0..span / 4 + 1);
                let xs: Vec<f64> = pred.xs()[first + cut..=last].to_vec();
                pred = Lane::from_rows(n, first + cut, &xs, 1.0).expect("trimmed lane");
            }
            (pred, gt)
        })
        .collect()
}
