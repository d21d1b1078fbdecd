//! Dynamic training-sample assignment driven by lane IoU.
//!
//! Each ground truth receives a dynamic number of positive anchors: `k_i` is
//! the clamped floor of the sum of its positive IoUs across predictions, the
//! assignment cost combines a per-column min-max-normalized IoU with a focal
//! classification cost, and each GT takes its `k_i` cheapest predictions. A
//! prediction claimed by several GTs keeps only its cheapest pair and the
//! freed slots are not refilled. The similarity is switchable between the
//! tilt-aware LaneIoU and the constant-width baseline for ablations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::Frame;
use crate::iou::{iou_matrix, IoUConfig, IoUMatrix, IoUMode};
use crate::lane::{fit_anchor, Lane, RowGrid};
use crate::mat::DenseMatrix;
use crate::raster::{mask_iou, rasterize, LaneMask, MaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Similarity {
    /// Tilt-aware widths.
    LaneIoU,
    /// Constant-width baseline.
    Baseline,
}

impl Similarity {
    fn mode(self) -> IoUMode {
        match self {
            Self::LaneIoU => IoUMode::LaneIoU,
            Self::Baseline => IoUMode::LineIoU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignConfig {
    /// Upper clamp for the per-GT assignment count.
    pub k_max: usize,
    /// Virtual width for the dynamic-k IoU matrix (and the IoU loss).
    pub w_lane_k: f64,
    /// Wider virtual width for the cost IoU matrix, balancing it against the
    /// classification cost.
    pub w_lane_cost: f64,
    /// Classification-cost weight in the assignment cost.
    pub lambda: f64,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub similarity: Similarity,
}

impl AssignConfig {
    /// CULane-style defaults: widths 15/800 and 60/800.
    pub fn culane() -> Self {
        Self {
            k_max: 4,
            w_lane_k: 15.0 / 800.0,
            w_lane_cost: 60.0 / 800.0,
            lambda: 1.0,
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            similarity: Similarity::LaneIoU,
        }
    }

    /// CurveLanes-style settings: widths 5/224 and 20/224, lambda 2.5.
    pub fn curvelanes() -> Self {
        Self {
            w_lane_k: 5.0 / 224.0,
            w_lane_cost: 20.0 / 224.0,
            lambda: 2.5,
            ..Self::culane()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        if !(self.w_lane_k > 0.0) || !(self.w_lane_cost > 0.0) {
            return Err(Error::InvalidConfig("assignment widths must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self::culane()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignedPair {
    pub pred: usize,
    pub gt: usize,
    pub cost: f64,
}

/// Per-GT dynamic-k values and the surviving prediction->GT pairs, sorted by
/// (gt, pred). Predictions not listed are negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub k: Vec<usize>,
    pub pairs: Vec<AssignedPair>,
}

impl AssignmentResult {
    pub fn count_for_gt(&self, gt: usize) -> usize {
        self.pairs.iter().filter(|p| p.gt == gt).count()
    }
}

/// Per-GT assignment count: `clamp(floor(sum_j max(iou_ji, 0)), 1, k_max)`.
///
/// Negative IoUs are clamped to zero before summing, so only overlapping
/// predictions contribute. With zero predictions every GT still gets k = 1
/// (unsatisfiable; the assignment simply yields no pairs).
pub fn dynamic_k(iou: &IoUMatrix, cfg: &AssignConfig) -> Vec<usize> {
    (0..iou.n_gts())
        .map(|i| {
            let positive_sum: f64 =
                (0..iou.n_preds()).map(|j| iou.get(j, i).max(0.0)).sum();
            (positive_sum.floor() as i64).clamp(1, cfg.k_max as i64) as usize
        })
        .collect()
}

/// Focal classification cost of predicting confidence `conf` against a
/// positive (or negative) target: `-alpha * (1 - p)^gamma * ln(p)` for the
/// positive branch. Confidence is clamped away from 0 and 1 by 1e-7.
pub fn focal_cost(conf: f64, target_positive: bool, cfg: &AssignConfig) -> f64 {
    let p = conf.clamp(1e-7, 1.0 - 1e-7);
    if target_positive {
        -cfg.focal_alpha * (1.0 - p).powf(cfg.focal_gamma) * p.ln()
    } else {
        -(1.0 - cfg.focal_alpha) * p.powf(cfg.focal_gamma) * (1.0 - p).ln()
    }
}

/// Assignment cost matrix: per-GT column min-max normalization of the IoU
/// (clamped to [0, 1]) negated, plus `lambda` times the focal cost of the
/// prediction's confidence against the positive target.
///
/// A single-prediction column has no spread; its normalized IoU is defined
/// as 1.
pub fn cost_matrix(iou_cost: &IoUMatrix, confs: &[f64], cfg: &AssignConfig) -> DenseMatrix {
    let m = iou_cost.n_preds();
    let n = iou_cost.n_gts();
    debug_assert_eq!(confs.len(), m);
    let class_cost: Vec<f64> = confs.iter().map(|&c| focal_cost(c, true, cfg)).collect();
    let mut cost = DenseMatrix::zeros(m, n);
    for i in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..m {
            lo = lo.min(iou_cost.get(j, i));
            hi = hi.max(iou_cost.get(j, i));
        }
        for j in 0..m {
            let norm = if m == 1 {
                1.0
            } else {
                ((iou_cost.get(j, i) - lo) / (hi - lo + 1e-9)).clamp(0.0, 1.0)
            };
            cost.set(j, i, -norm + cfg.lambda * class_cost[j]);
        }
    }
    cost
}

/// Dynamic top-k assignment with per-prediction conflict resolution.
///
/// Deterministic: top-k ties break toward the lower prediction index and
/// conflicts toward the lower GT index. Infeasible `k_i` (more slots than
/// predictions) simply yields fewer pairs.
pub fn assign(
    preds: &[Lane],
    gts: &[Lane],
    confs: &[f64],
    grid: &RowGrid,
    cfg: &AssignConfig,
) -> Result<AssignmentResult> {
    cfg.validate()?;
    if confs.len() != preds.len() {
        return Err(Error::InvalidConfig(format!(
            "{} confidences for {} predictions",
            confs.len(),
            preds.len()
        )));
    }
    let mode = cfg.similarity.mode();
    let k_cfg = IoUConfig { w_lane: cfg.w_lane_k, mode, clip_to_image: false };
    let cost_cfg = IoUConfig { w_lane: cfg.w_lane_cost, mode, clip_to_image: false };

    let iou_k = iou_matrix(preds, gts, grid, &k_cfg);
    let k = dynamic_k(&iou_k, cfg);
    let iou_c = iou_matrix(preds, gts, grid, &cost_cfg);
    let cost = cost_matrix(&iou_c, confs, cfg);

    let m = preds.len();
    // Per-GT top-k proposals.
    let mut proposals: Vec<AssignedPair> = Vec::new();
    for (i, &k_i) in k.iter().enumerate() {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            cost.get(a, i).total_cmp(&cost.get(b, i)).then(a.cmp(&b))
        });
        for &j in order.iter().take(k_i.min(m)) {
            proposals.push(AssignedPair { pred: j, gt: i, cost: cost.get(j, i) });
        }
    }
    // Conflict rule: each prediction keeps only its cheapest pair.
    let mut best: Vec<Option<AssignedPair>> = vec![None; m];
    for p in proposals {
        match &best[p.pred] {
            Some(cur) if (cur.cost, cur.gt) <= (p.cost, p.gt) => {}
            _ => best[p.pred] = Some(p),
        }
    }
    let mut pairs: Vec<AssignedPair> = best.into_iter().flatten().collect();
    pairs.sort_by(|a, b| a.gt.cmp(&b.gt).then(a.pred.cmp(&b.pred)));
    Ok(AssignmentResult { k, pairs })
}

/// One row of the angle-binned assignment statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBinRow {
    pub bin_start_deg: f64,
    pub mean_assign_count: f64,
    /// Mean |confidence - metric IoU| of predictions whose best-overlap GT
    /// falls in this bin; NaN when no prediction contributed.
    pub mean_conf_l1_error: f64,
    pub n_gts: usize,
}

/// Runs the assignment over a dataset and bins per-GT assigned counts and
/// per-prediction |confidence - metric IoU| errors by the GT angle (from
/// `fit_anchor`). Empty bins are absent from the output.
pub fn angle_bin_stats(
    frames: &[Frame],
    grid: &RowGrid,
    cfg: &AssignConfig,
    mask_spec: &MaskSpec,
    bin_width_deg: f64,
) -> Result<Vec<AngleBinRow>> {
    if !(bin_width_deg > 0.0) {
        return Err(Error::InvalidConfig("bin width must be positive".into()));
    }
    struct Acc {
        assign_sum: f64,
        n_gts: usize,
        l1_sum: f64,
        n_l1: usize,
    }
    let mut bins: BTreeMap<i64, Acc> = BTreeMap::new();
    for frame in frames {
        let confs: Vec<f64> = frame.preds.iter().map(Lane::confidence).collect();
        let result = assign(&frame.preds, &frame.gts, &confs, grid, cfg)?;
        let angles: Vec<Option<f64>> = frame
            .gts
            .iter()
            .map(|gt| fit_anchor(gt, grid).ok().map(|p| p.theta_a))
            .collect();
        for (i, angle) in angles.iter().enumerate() {
            let Some(angle) = angle else { continue };
            let key = (angle / bin_width_deg).floor() as i64;
            let acc = bins
                .entry(key)
                .or_insert(Acc { assign_sum: 0.0, n_gts: 0, l1_sum: 0.0, n_l1: 0 });
            acc.assign_sum += result.count_for_gt(i) as f64;
            acc.n_gts += 1;
        }
        // Metric-IoU confidence error, attributed to the best-overlap GT.
        let gt_masks: Vec<LaneMask> = frame
            .gts
            .iter()
            .map(|l| rasterize(l, grid, mask_spec).unwrap_or_else(|_| LaneMask::empty(mask_spec)))
            .collect();
        for pred in &frame.preds {
            let pred_mask = match rasterize(pred, grid, mask_spec) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, gm) in gt_masks.iter().enumerate() {
                let v = mask_iou(&pred_mask, gm).unwrap_or(0.0);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
            let Some((i, v)) = best else { continue };
            if v <= 0.0 {
                continue;
            }
            let Some(angle) = angles[i] else { continue };
            let key = (angle / bin_width_deg).floor() as i64;
            let acc = bins
                .entry(key)
                .or_insert(Acc { assign_sum: 0.0, n_gts: 0, l1_sum: 0.0, n_l1: 0 });
            acc.l1_sum += (pred.confidence() - v).abs();
            acc.n_l1 += 1;
        }
    }
    Ok(bins
        .into_iter()
        .map(|(key, acc)| AngleBinRow {
            bin_start_deg: key as f64 * bin_width_deg,
            mean_assign_count: if acc.n_gts > 0 { acc.assign_sum / acc.n_gts as f64 } else { 0.0 },
            mean_conf_l1_error: if acc.n_l1 > 0 { acc.l1_sum / acc.n_l1 as f64 } else { f64::NAN },
            n_gts: acc.n_gts,
        })
        .collect())
}

/// CSV with the fixed column order
/// `angle_bin_start_deg,mean_assign_count,mean_conf_l1_error,n_gts`.
pub fn angle_bins_to_csv(rows: &[AngleBinRow]) -> String {
    let mut out = String::from("angle_bin_start_deg,mean_assign_count,mean_conf_l1_error,n_gts\n");
    for r in rows {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{}\n",
            r.bin_start_deg, r.mean_assign_count, r.mean_conf_l1_error, r.n_gts
        ));
    }
    out
}

/// Population variance of the per-bin mean assignment counts over bins whose
/// start lies in `[lo_deg, hi_deg)`; the homogeneity figure of merit.
pub fn bin_count_variance(rows: &[AngleBinRow], lo_deg: f64, hi_deg: f64) -> f64 {
    let counts: Vec<f64> = rows
        .iter()
        .filter(|r| r.bin_start_deg >= lo_deg && r.bin_start_deg < hi_deg && r.n_gts > 0)
        .map(|r| r.mean_assign_count)
        .collect();
    if counts.is_empty() {
        return 0.0;
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / counts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iou::iou_matrix;

    fn grid() -> RowGrid {
        RowGrid::new(24, 800.0, 320.0).unwrap()
    }

    fn vlane(x: f64, conf: f64, g: &RowGrid) -> Lane {
        Lane::from_rows(g.n_rows(), 0, &vec![x; g.n_rows()], conf).unwrap()
    }

    #[test]
    fn dynamic_k_clamps_and_floors() {
        let g = grid();
        let cfg = AssignConfig::culane();
        let w = cfg.w_lane_k * 800.0; // 15 px

        // Single prediction with IoU 0.3: floor(0.3) = 0 -> lower clamp 1.
        // Offset d solves (w - d) / (w + d) = 0.3 -> d = w * 7/13.
        let gt = vlane(0.5, 1.0, &g);
        let d = w * 7.0 / 13.0 / 800.0;
        let p = gt.shifted(d);
        let iou = iou_matrix(&[p.clone()], &[gt.clone()], &g, &IoUConfig::lane_iou(cfg.w_lane_k));
        assert!((iou.get(0, 0) - 0.3).abs() < 1e-9);
        assert_eq!(dynamic_k(&iou, &cfg), vec![1]);

        // Three predictions at IoU 0.9 each: floor(2.7) = 2.
        let d9 = w / 19.0 / 800.0; // (w - d) / (w + d) = 0.9
        let preds: Vec<Lane> = (0..3).map(|_| gt.shifted(d9)).collect();
        let iou = iou_matrix(&preds, &[gt.clone()], &g, &IoUConfig::lane_iou(cfg.w_lane_k));
        assert_eq!(dynamic_k(&iou, &cfg), vec![2]);

        // Eleven perfect predictions: sum 11 -> upper clamp k_max = 4.
        let preds: Vec<Lane> = (0..11).map(|_| gt.clone()).collect();
        let iou = iou_matrix(&preds, &[gt.clone()], &g, &IoUConfig::lane_iou(cfg.w_lane_k));
        assert_eq!(dynamic_k(&iou, &cfg), vec![4]);

        // Negative IoUs are clamped to zero before summing.
        let far = vlane(0.95, 1.0, &g);
        let iou = iou_matrix(&[far], &[gt], &g, &IoUConfig::lane_iou(cfg.w_lane_k));
        assert!(iou.get(0, 0) < 0.0);
        assert_eq!(dynamic_k(&iou, &cfg), vec![1]);
    }

    #[test]
    fn focal_cost_values() {
        let cfg = AssignConfig::culane();
        assert!(focal_cost(1.0, true, &cfg) < 1e-6);
        // p = 0.5, alpha = 0.25, gamma = 2: 0.25 * 0.25 * ln 2.
        let expected = 0.25 * 0.25 * std::f64::consts::LN_2;
        assert!((focal_cost(0.5, true, &cfg) - expected).abs() < 1e-12);
        assert!((expected - 0.04332).abs() < 1e-4);
        // Strictly decreasing in p.
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let c = focal_cost(k as f64 / 100.0, true, &cfg);
            assert!(c < prev);
            prev = c;
        }
        // Negative-target branch is increasing in p.
        assert!(focal_cost(0.9, false, &cfg) > focal_cost(0.1, false, &cfg));
    }

    #[test]
    fn cost_matrix_ordering_and_hand_values() {
        let g = grid();
        let gt = vlane(0.5, 1.0, &g);
        let w = AssignConfig::culane().w_lane_cost; // normalized
        // Offsets giving IoUs 0.2 and 0.8 under the cost width.
        let d_for = |target: f64| w / 2.0 * (1.0 - target) / (1.0 + target) * 2.0;
        let p_low = gt.shifted(d_for(0.2));
        let p_high = gt.shifted(d_for(0.8));

        let mut cfg = AssignConfig { lambda: 0.0, ..AssignConfig::culane() };
        let iou = iou_matrix(
            &[p_low.clone(), p_high.clone()],
            &[gt.clone()],
            &g,
            &IoUConfig::lane_iou(cfg.w_lane_cost),
        );
        let cost = cost_matrix(&iou, &[0.5, 0.5], &cfg);
        assert!((cost.get(0, 0) - 0.0).abs() < 1e-6);
        assert!((cost.get(1, 0) - (-1.0)).abs() < 1e-6);

        // Identical IoUs: higher confidence is cheaper once lambda > 0.
        cfg.lambda = 1.0;
        let iou_same = iou_matrix(
            &[p_high.clone(), p_high.clone()],
            &[gt.clone()],
            &g,
            &IoUConfig::lane_iou(cfg.w_lane_cost),
        );
        let cost = cost_matrix(&iou_same, &[0.9, 0.4], &cfg);
        assert!(cost.get(0, 0) < cost.get(1, 0));

        // 3x2 against element-wise recomputation with lambda 2.5.
        cfg.lambda = 2.5;
        let gts = vec![gt.clone(), vlane(0.6, 1.0, &g)];
        let preds = vec![p_low, p_high, vlane(0.58, 1.0, &g)];
        let confs = [0.3, 0.7, 0.9];
        let iou = iou_matrix(&preds, &gts, &g, &IoUConfig::lane_iou(cfg.w_lane_cost));
        let cost = cost_matrix(&iou, &confs, &cfg);
        for i in 0..2 {
            let col: Vec<f64> = (0..3).map(|j| iou.get(j, i)).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for j in 0..3 {
                let norm = ((col[j] - lo) / (hi - lo + 1e-9)).clamp(0.0, 1.0);
                let expected = -norm + cfg.lambda * focal_cost(confs[j], true, &cfg);
                assert!((cost.get(j, i) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cost_matrix_single_prediction_column() {
        let g = grid();
        let gt = vlane(0.5, 1.0, &g);
        let p = gt.shifted(0.01);
        let cfg = AssignConfig { lambda: 0.0, ..AssignConfig::culane() };
        let iou = iou_matrix(&[p], &[gt], &g, &IoUConfig::lane_iou(cfg.w_lane_cost));
        let cost = cost_matrix(&iou, &[0.5], &cfg);
        assert_eq!(cost.get(0, 0), -1.0);
    }

    #[test]
    fn cost_ordering_is_affine_invariant_at_lambda_zero() {
        // Min-max normalization is affine-invariant: scaling a column by a
        // positive constant and shifting it leaves the cost ordering alone.
        let raw = [0.1, 0.55, 0.4, 0.9];
        let order = |values: &[f64]| {
            let mut idx: Vec<usize> = (0..values.len()).collect();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let cost: Vec<f64> = values
                .iter()
                .map(|v| -((v - lo) / (hi - lo + 1e-9)).clamp(0.0, 1.0))
                .collect();
            idx.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
            idx
        };
        let scaled: Vec<f64> = raw.iter().map(|v| 0.37 * v + 0.11).collect();
        assert_eq!(order(&raw), order(&scaled));
    }

    #[test]
    fn assign_singleton_and_conflict() {
        let g = grid();
        let cfg = AssignConfig::culane();
        let gt = vlane(0.5, 1.0, &g);
        let res = assign(&[gt.clone()], &[gt.clone()], &[0.9], &g, &cfg).unwrap();
        assert_eq!(res.k, vec![1]);
        assert_eq!(res.pairs.len(), 1);
        assert_eq!((res.pairs[0].pred, res.pairs[0].gt), (0, 0));

        // One prediction equally near two GTs: kept by exactly one (the
        // cheaper pair; exact tie goes to the lower GT index).
        let gts = vec![vlane(0.4, 1.0, &g), vlane(0.6, 1.0, &g)];
        let pred = vlane(0.5, 0.9, &g);
        let res = assign(&[pred], &gts, &[0.9], &g, &cfg).unwrap();
        assert_eq!(res.pairs.len(), 1);
        assert_eq!(res.pairs[0].gt, 0);
    }

    #[test]
    fn assign_never_duplicates_predictions_and_respects_k() {
        use rand::{Rng, SeedableRng};
        let g = grid();
        let cfg = AssignConfig::culane();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n_gts = rng.random_range(1..4);
            let n_preds = rng.random_range(1..9);
            let gts: Vec<Lane> =
                (0..n_gts).map(|_| vlane(rng.random_range(0.2..0.8), 1.0, &g)).collect();
            let preds: Vec<Lane> = (0..n_preds)
                .map(|_| vlane(rng.random_range(0.2..0.8), 1.0, &g))
                .collect();
            let confs: Vec<f64> = (0..n_preds).map(|_| rng.random_range(0.01..0.99)).collect();
            let res = assign(&preds, &gts, &confs, &g, &cfg).unwrap();
            let mut seen = std::collections::HashSet::new();
            for p in &res.pairs {
                assert!(seen.insert(p.pred), "prediction assigned twice");
            }
            for (i, &k_i) in res.k.iter().enumerate() {
                assert!((1..=cfg.k_max).contains(&k_i));
                assert!(res.count_for_gt(i) <= k_i);
            }
        }
    }

    #[test]
    fn assign_kmax_one_degenerates_to_argmax() {
        let g = grid();
        let cfg = AssignConfig { k_max: 1, lambda: 0.0, ..AssignConfig::culane() };
        let gts = vec![vlane(0.3, 1.0, &g), vlane(0.7, 1.0, &g)];
        let preds = vec![
            vlane(0.29, 0.5, &g),
            vlane(0.33, 0.5, &g),
            vlane(0.71, 0.5, &g),
            vlane(0.6, 0.5, &g),
        ];
        let confs = [0.5; 4];
        let res = assign(&preds, &gts, &confs, &g, &cfg).unwrap();
        let iou = iou_matrix(&preds, &gts, &g, &IoUConfig::lane_iou(cfg.w_lane_cost));
        for p in &res.pairs {
            // The kept prediction is the per-GT argmax of the IoU.
            let best = (0..4)
                .max_by(|&a, &b| iou.get(a, p.gt).total_cmp(&iou.get(b, p.gt)))
                .unwrap();
            assert_eq!(p.pred, best);
        }
    }

    #[test]
    fn assign_is_deterministic() {
        let g = grid();
        let cfg = AssignConfig::culane();
        let gts = vec![vlane(0.4, 1.0, &g), vlane(0.62, 1.0, &g)];
        let preds: Vec<Lane> =
            (0..8).map(|k| vlane(0.35 + 0.04 * k as f64, 0.5, &g)).collect();
        let confs: Vec<f64> = (0..8).map(|k| 0.2 + 0.08 * k as f64).collect();
        let a = assign(&preds, &gts, &confs, &g, &cfg).unwrap();
        let b = assign(&preds, &gts, &confs, &g, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assign_matches_exhaustive_selection() {
        use rand::{Rng, SeedableRng};
        let g = grid();
        let cfg = AssignConfig::culane();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for case in 0..25 {
            let n_gts = rng.random_range(1..=3);
            let n_preds = rng.random_range(1..=8);
            let gts: Vec<Lane> =
                (0..n_gts).map(|_| vlane(rng.random_range(0.25..0.75), 1.0, &g)).collect();
            let preds: Vec<Lane> = (0..n_preds)
                .map(|_| vlane(rng.random_range(0.25..0.75), 1.0, &g))
                .collect();
            let confs: Vec<f64> = (0..n_preds).map(|_| rng.random_range(0.01..0.99)).collect();
            let got = assign(&preds, &gts, &confs, &g, &cfg).unwrap();
            let expected = exhaustive_assign(&preds, &gts, &confs, &g, &cfg);
            assert_eq!(got.pairs, expected, "case {case}");
        }
    }

    /// Oracle: per-GT minimum-total-cost subset by exhaustive enumeration
    /// (lexicographically smallest index set among ties), then the same
    /// conflict rule.
    fn exhaustive_assign(
        preds: &[Lane],
        gts: &[Lane],
        confs: &[f64],
        grid: &RowGrid,
        cfg: &AssignConfig,
    ) -> Vec<AssignedPair> {
        let mode = cfg.similarity.mode();
        let iou_k = iou_matrix(preds, gts, grid, &IoUConfig { w_lane: cfg.w_lane_k, mode, clip_to_image: false });
        let k = dynamic_k(&iou_k, cfg);
        let iou_c = iou_matrix(preds, gts, grid, &IoUConfig { w_lane: cfg.w_lane_cost, mode, clip_to_image: false });
        let cost = cost_matrix(&iou_c, confs, cfg);

        let m = preds.len();
        let mut proposals = Vec::new();
        for (i, &k_i) in k.iter().enumerate() {
            let want = k_i.min(m);
            let mut best_subset: Option<(f64, Vec<usize>)> = None;
            let mut subset = Vec::new();
            enumerate_subsets(m, want, 0, &mut subset, &mut |s: &[usize]| {
                let total: f64 = s.iter().map(|&j| cost.get(j, i)).sum();
                match &best_subset {
                    Some((bt, bs)) if *bt < total || (*bt == total && bs <= &s.to_vec()) => {}
                    _ => best_subset = Some((total, s.to_vec())),
                }
            });
            if let Some((_, s)) = best_subset {
                for j in s {
                    proposals.push(AssignedPair { pred: j, gt: i, cost: cost.get(j, i) });
                }
            }
        }
        let mut best: Vec<Option<AssignedPair>> = vec![None; m];
        for p in proposals {
            match &best[p.pred] {
                Some(cur) if (cur.cost, cur.gt) <= (p.cost, p.gt) => {}
                _ => best[p.pred] = Some(p),
            }
        }
        let mut pairs: Vec<AssignedPair> = best.into_iter().flatten().collect();
        pairs.sort_by(|a, b| a.gt.cmp(&b.gt).then(a.pred.cmp(&b.pred)));
        pairs
    }

    fn enumerate_subsets(
        m: usize,
        want: usize,
        start: usize,
        current: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if current.len() == want {
            visit(current);
            return;
        }
        for j in start..m {
            current.push(j);
            enumerate_subsets(m, want, j + 1, current, visit);
            current.pop();
        }
    }

    #[test]
    fn angle_bins_single_vertical_gt() {
        let g = grid();
        let gt = vlane(0.5, 1.0, &g);
        let pred = gt.clone().with_confidence(0.8);
        let frames = vec![Frame {
            id: "f".into(),
            video: "v".into(),
            category: None,
            gts: vec![gt],
            preds: vec![pred],
        }];
        let rows = angle_bin_stats(
            &frames,
            &g,
            &AssignConfig::culane(),
            &MaskSpec::new(30, (400, 160)).unwrap(),
            10.0,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].bin_start_deg, 90.0);
        assert_eq!(rows[0].n_gts, 1);
        assert!((rows[0].mean_conf_l1_error - 0.2).abs() < 1e-9);
    }

    #[test]
    fn angle_bins_are_symmetric_for_mirrored_scenes() {
        use crate::lane::{render_anchor, AnchorParams};
        let g = grid();
        // Interior of a bin on both sides so fit rounding cannot cross bins.
        let theta = 64.0;
        let make_frame = |theta: f64, x_a: f64, shift_sign: f64| {
            let gt = render_anchor(
                &AnchorParams { x_a, y_a: 1.0, theta_a: theta, length: 0.9, dx: vec![] },
                &g,
            )
            .unwrap();
            let preds: Vec<Lane> = [3.0, 6.0]
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    gt.shifted(shift_sign * d / 800.0).with_confidence(0.9 - 0.1 * k as f64)
                })
                .collect();
            Frame { id: "m".into(), video: "m".into(), category: None, gts: vec![gt], preds }
        };
        // Mirroring x -> 1 - x maps angle theta to 180 - theta exactly.
        let frames = vec![make_frame(theta, 0.3, 1.0), make_frame(180.0 - theta, 0.7, -1.0)];
        let rows = angle_bin_stats(
            &frames,
            &g,
            &AssignConfig::culane(),
            &MaskSpec::new(15, (400, 160)).unwrap(),
            10.0,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let lo = rows.iter().find(|r| r.bin_start_deg == 60.0).unwrap();
        let hi = rows.iter().find(|r| r.bin_start_deg == 110.0).unwrap();
        assert_eq!(lo.n_gts, hi.n_gts);
        assert_eq!(lo.mean_assign_count, hi.mean_assign_count);
        assert!((lo.mean_conf_l1_error - hi.mean_conf_l1_error).abs() < 1e-3);
    }

    #[test]
    fn csv_column_order() {
        let rows = vec![AngleBinRow {
            bin_start_deg: 40.0,
            mean_assign_count: 2.5,
            mean_conf_l1_error: 0.125,
            n_gts: 4,
        }];
        let csv = angle_bins_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "angle_bin_start_deg,mean_assign_count,mean_conf_l1_error,n_gts"
        );
        assert_eq!(lines.next().unwrap(), "40.000000,2.500000,0.125000,4");
    }
}
