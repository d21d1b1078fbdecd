//! Benchmark evaluation protocol.
//!
//! Per frame, a prediction x ground-truth IoU matrix (segmentation-mask IoU
//! by default) feeds a maximum-total-IoU one-to-one matching; matched pairs
//! with IoU strictly above each threshold count as true positives, unmatched
//! predictions as false positives and unmatched ground truths as false
//! negatives. Counts aggregate globally and per scene category into
//! precision, recall and F1. Confidence-threshold sweeps reuse cached
//! matrices, and the operating threshold is selected by k-fold
//! cross-validation over videos.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iou::{iou_matrix, IoUConfig};
use crate::lane::{Lane, RowGrid};
use crate::mat::DenseMatrix;
use crate::matching::linear_sum_assignment;
use crate::raster::{mask_iou, rasterize, LaneMask, MaskSpec};

/// One image: ground-truth lanes and scored predictions on a shared grid.
#[derive(Debug, Clone)]
pub struct Frame {
    /// Image key, typically the relative path from the dataset root.
    pub id: String,
    /// Video/sequence id (the path prefix for CULane-style data).
    pub video: String,
    pub category: Option<String>,
    pub gts: Vec<Lane>,
    pub preds: Vec<Lane>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IoUBackend {
    /// Segmentation-mask IoU; the metric's definition.
    MaskOracle,
    /// Row-wise LaneIoU; fast but approximate relative to the metric.
    LaneIoU,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// IoU thresholds for TP counting, ascending.
    pub t_iou: Vec<f64>,
    pub backend: IoUBackend,
    pub mask_spec: MaskSpec,
    /// Row-wise IoU settings used by the `LaneIoU` backend.
    pub lane_cfg: IoUConfig,
    /// Predictions below this confidence are dropped before matching.
    pub conf_threshold: f64,
}

impl EvalConfig {
    /// CULane protocol: thresholds 0.5/0.75, 30 px masks at 1640x590.
    pub fn culane() -> Self {
        Self {
            t_iou: vec![0.5, 0.75],
            backend: IoUBackend::MaskOracle,
            mask_spec: MaskSpec::culane(),
            lane_cfg: IoUConfig::lane_iou(30.0 / 1640.0).with_clip(true),
            conf_threshold: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_iou.is_empty() {
            return Err(Error::InvalidConfig("t_iou must not be empty".into()));
        }
        if self.t_iou.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidConfig("t_iou values must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::culane()
    }
}

/// TP/FP/FN triple for a single IoU threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_count += other.fn_count;
    }
}

fn mask_or_empty(lane: &Lane, grid: &RowGrid, spec: &MaskSpec) -> LaneMask {
    rasterize(lane, grid, spec).unwrap_or_else(|_| LaneMask::empty(spec))
}

/// Prediction x GT similarity matrix for one frame under the configured
/// backend. Pairs without a defined IoU score 0 (mask backend) or the -1
/// sentinel (lane backend); both are below every threshold.
pub fn frame_iou_matrix(
    preds: &[Lane],
    gts: &[Lane],
    grid: &RowGrid,
    cfg: &EvalConfig,
) -> DenseMatrix {
    match cfg.backend {
        IoUBackend::MaskOracle => {
            let pred_masks: Vec<LaneMask> =
                preds.iter().map(|l| mask_or_empty(l, grid, &cfg.mask_spec)).collect();
            let gt_masks: Vec<LaneMask> =
                gts.iter().map(|l| mask_or_empty(l, grid, &cfg.mask_spec)).collect();
            DenseMatrix::from_fn(preds.len(), gts.len(), |j, i| {
                mask_iou(&pred_masks[j], &gt_masks[i]).unwrap_or(0.0)
            })
        }
        IoUBackend::LaneIoU => {
            iou_matrix(preds, gts, grid, &cfg.lane_cfg).values().clone()
        }
    }
}

/// Matching and thresholding given a prebuilt IoU matrix.
pub fn match_from_matrix(iou: &DenseMatrix, t_iou: &[f64]) -> Vec<Counts> {
    let m = iou.rows() as u64;
    let n = iou.cols() as u64;
    if m == 0 || n == 0 {
        return t_iou.iter().map(|_| Counts { tp: 0, fp: m, fn_count: n }).collect();
    }
    let cost = DenseMatrix::from_fn(iou.rows(), iou.cols(), |j, i| -iou.get(j, i));
    let pairs = linear_sum_assignment(&cost);
    t_iou
        .iter()
        .map(|&t| {
            let tp = pairs.iter().filter(|&&(j, i)| iou.get(j, i) > t).count() as u64;
            Counts { tp, fp: m - tp, fn_count: n - tp }
        })
        .collect()
}

/// Per-threshold counts for one frame. Predictions must already be filtered
/// by the confidence threshold.
pub fn match_frame(preds: &[Lane], gts: &[Lane], grid: &RowGrid, cfg: &EvalConfig) -> Vec<Counts> {
    let iou = frame_iou_matrix(preds, gts, grid, cfg);
    match_from_matrix(&iou, &cfg.t_iou)
}

/// Derived metrics for one (threshold, category) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_count: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricBlock {
    pub fn from_counts(c: Counts) -> Self {
        let precision = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
        let recall = if c.tp + c.fn_count == 0 {
            0.0
        } else {
            c.tp as f64 / (c.tp + c.fn_count) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { tp: c.tp, fp: c.fp, fn_count: c.fn_count, precision, recall, f1 }
    }

    /// True for categories with no ground-truth lanes (CULane's Cross-style
    /// scenes), where the FP count is the reported figure instead of F1.
    pub fn reports_fp_only(&self) -> bool {
        self.tp + self.fn_count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub t_iou: f64,
    pub overall: MetricBlock,
    pub per_category: BTreeMap<String, MetricBlock>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub conf_threshold: f64,
    pub thresholds: Vec<ThresholdMetrics>,
}

impl EvalReport {
    /// Overall metrics at the given IoU threshold, if present.
    pub fn at(&self, t_iou: f64) -> Option<&MetricBlock> {
        self.thresholds
            .iter()
            .find(|t| (t.t_iou - t_iou).abs() < 1e-12)
            .map(|t| &t.overall)
    }
}

fn kept_preds(frame: &Frame, conf_threshold: f64) -> Vec<Lane> {
    frame.preds.iter().filter(|p| p.confidence() >= conf_threshold).cloned().collect()
}

fn build_report(
    conf_threshold: f64,
    t_iou: &[f64],
    overall: &[Counts],
    per_category: &BTreeMap<String, Vec<Counts>>,
) -> EvalReport {
    let thresholds = t_iou
        .iter()
        .enumerate()
        .map(|(k, &t)| ThresholdMetrics {
            t_iou: t,
            overall: MetricBlock::from_counts(overall[k]),
            per_category: per_category
                .iter()
                .map(|(cat, counts)| (cat.clone(), MetricBlock::from_counts(counts[k])))
                .collect(),
        })
        .collect();
    EvalReport { schema_version: REPORT_SCHEMA_VERSION, conf_threshold, thresholds }
}

/// Evaluates a dataset: per-frame matching, global and per-category sums.
///
/// Frames with no predictions and no ground truths contribute nothing.
pub fn evaluate(frames: &[Frame], grid: &RowGrid, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let outcomes: Vec<(Option<&str>, Vec<Counts>)> = frames
        .par_iter()
        .map(|frame| {
            let kept = kept_preds(frame, cfg.conf_threshold);
            (frame.category.as_deref(), match_frame(&kept, &frame.gts, grid, cfg))
        })
        .collect();

    let mut overall = vec![Counts::default(); cfg.t_iou.len()];
    let mut per_category: BTreeMap<String, Vec<Counts>> = BTreeMap::new();
    for (category, counts) in outcomes {
        for (k, c) in counts.iter().enumerate() {
            overall[k].add(*c);
        }
        if let Some(cat) = category {
            let slot = per_category
                .entry(cat.to_string())
                .or_insert_with(|| vec![Counts::default(); cfg.t_iou.len()]);
            for (k, c) in counts.iter().enumerate() {
                slot[k].add(*c);
            }
        }
    }
    Ok(build_report(cfg.conf_threshold, &cfg.t_iou, &overall, &per_category))
}

struct FrameCache {
    category: Option<String>,
    confidences: Vec<f64>,
    iou: DenseMatrix,
}

fn build_caches(frames: &[Frame], grid: &RowGrid, cfg: &EvalConfig) -> Vec<FrameCache> {
    frames
        .par_iter()
        .map(|frame| FrameCache {
            category: frame.category.clone(),
            confidences: frame.preds.iter().map(Lane::confidence).collect(),
            iou: frame_iou_matrix(&frame.preds, &frame.gts, grid, cfg),
        })
        .collect()
}

fn evaluate_cached(caches: &[FrameCache], cfg: &EvalConfig, conf_threshold: f64) -> EvalReport {
    let mut overall = vec![Counts::default(); cfg.t_iou.len()];
    let mut per_category: BTreeMap<String, Vec<Counts>> = BTreeMap::new();
    for cache in caches {
        let rows: Vec<usize> = (0..cache.confidences.len())
            .filter(|&j| cache.confidences[j] >= conf_threshold)
            .collect();
        let sub = cache.iou.select_rows(&rows);
        let counts = match_from_matrix(&sub, &cfg.t_iou);
        for (k, c) in counts.iter().enumerate() {
            overall[k].add(*c);
        }
        if let Some(cat) = &cache.category {
            let slot = per_category
                .entry(cat.clone())
                .or_insert_with(|| vec![Counts::default(); cfg.t_iou.len()]);
            for (k, c) in counts.iter().enumerate() {
                slot[k].add(*c);
            }
        }
    }
    build_report(conf_threshold, &cfg.t_iou, &overall, &per_category)
}

/// Evaluates at several confidence thresholds with the IoU matrices computed
/// once. F1 is piecewise-constant between distinct confidence values.
pub fn threshold_sweep(
    frames: &[Frame],
    grid: &RowGrid,
    cfg: &EvalConfig,
    thresholds: &[f64],
) -> Result<Vec<(f64, EvalReport)>> {
    cfg.validate()?;
    let caches = build_caches(frames, grid, cfg);
    Ok(thresholds
        .iter()
        .map(|&t| (t, evaluate_cached(&caches, cfg, t)))
        .collect())
}

/// Deterministic partition of videos into folds: a pure function of the
/// video set and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub n_folds: usize,
    pub seed: u64,
    assignments: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn new(videos: &[String], n_folds: usize, seed: u64) -> Result<Self> {
        if n_folds == 0 {
            return Err(Error::InvalidConfig("n_folds must be >= 1".into()));
        }
        let mut unique: Vec<String> = videos.to_vec();
        unique.sort();
        unique.dedup();
        if unique.len() < n_folds {
            return Err(Error::NotEnoughVideos { videos: unique.len(), folds: n_folds });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        unique.shuffle(&mut rng);
        let assignments = unique
            .into_iter()
            .enumerate()
            .map(|(idx, video)| (video, idx % n_folds))
            .collect();
        Ok(Self { n_folds, seed, assignments })
    }

    pub fn fold_of(&self, video: &str) -> Option<usize> {
        self.assignments.get(video).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<String, usize> {
        &self.assignments
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalResult {
    pub best_threshold: f64,
    pub thresholds: Vec<f64>,
    /// F1 at the primary IoU threshold, averaged across folds.
    pub mean_f1: Vec<f64>,
    /// `per_fold_f1[fold][threshold_index]`.
    pub per_fold_f1: Vec<Vec<f64>>,
    pub split: FoldSplit,
}

/// Selects the confidence threshold by k-fold cross-validation over videos:
/// per fold, sweep the candidate thresholds on that fold's frames; average F1
/// at the primary (first) IoU threshold across folds and take the argmax,
/// breaking ties toward the smallest threshold.
pub fn crossval_threshold(
    frames: &[Frame],
    grid: &RowGrid,
    cfg: &EvalConfig,
    n_folds: usize,
    thresholds: &[f64],
    seed: u64,
) -> Result<CrossvalResult> {
    cfg.validate()?;
    if thresholds.is_empty() {
        return Err(Error::EmptyInput("candidate thresholds"));
    }
    let videos: Vec<String> = frames.iter().map(|f| f.video.clone()).collect();
    let split = FoldSplit::new(&videos, n_folds, seed)?;

    let mut per_fold_f1 = Vec::with_capacity(n_folds);
    for fold in 0..n_folds {
        let fold_frames: Vec<Frame> = frames
            .iter()
            .filter(|f| split.fold_of(&f.video) == Some(fold))
            .cloned()
            .collect();
        let sweeps = threshold_sweep(&fold_frames, grid, cfg, thresholds)?;
        let f1s: Vec<f64> = sweeps
            .iter()
            .map(|(_, report)| report.thresholds[0].overall.f1)
            .collect();
        per_fold_f1.push(f1s);
    }

    let mean_f1: Vec<f64> = (0..thresholds.len())
        .map(|k| per_fold_f1.iter().map(|f| f[k]).sum::<f64>() / n_folds as f64)
        .collect();
    let mut best = 0usize;
    for k in 1..thresholds.len() {
        if mean_f1[k] > mean_f1[best] {
            best = k;
        }
    }
    Ok(CrossvalResult {
        best_threshold: thresholds[best],
        thresholds: thresholds.to_vec(),
        mean_f1,
        per_fold_f1,
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single report.
    pub std_dev: f64,
}

fn mean_std(values: &[f64]) -> MetricStats {
    // A constant sample has zero deviation exactly, not rounding dust.
    if values.windows(2).all(|w| w[0] == w[1]) {
        return MetricStats { mean: values[0], std_dev: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_dev = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricStats { mean, std_dev }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub t_iou: f64,
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
    pub per_category_f1: BTreeMap<String, MetricStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedSummary {
    pub n_reports: usize,
    pub per_threshold: Vec<ThresholdStats>,
}

/// Mean and sample standard deviation of the metrics across repeated runs
/// (e.g. models trained with different seeds). Reports must share the same
/// IoU thresholds and category sets.
pub fn multi_seed_report(reports: &[EvalReport]) -> Result<MultiSeedSummary> {
    let first = reports.first().ok_or(Error::EmptyInput("reports"))?;
    for r in reports {
        if r.thresholds.len() != first.thresholds.len() {
            return Err(Error::InvalidConfig("reports have different threshold sets".into()));
        }
    }
    let mut per_threshold = Vec::with_capacity(first.thresholds.len());
    for (k, tm) in first.thresholds.iter().enumerate() {
        for r in reports {
            if (r.thresholds[k].t_iou - tm.t_iou).abs() > 1e-12 {
                return Err(Error::InvalidConfig("reports have different t_iou values".into()));
            }
            if r.thresholds[k].per_category.keys().ne(tm.per_category.keys()) {
                return Err(Error::InvalidConfig("reports have different category sets".into()));
            }
        }
        let collect = |f: &dyn Fn(&MetricBlock) -> f64| -> Vec<f64> {
            reports.iter().map(|r| f(&r.thresholds[k].overall)).collect()
        };
        let per_category_f1 = tm
            .per_category
            .keys()
            .map(|cat| {
                let values: Vec<f64> = reports
                    .iter()
                    .map(|r| r.thresholds[k].per_category[cat].f1)
                    .collect();
                (cat.clone(), mean_std(&values))
            })
            .collect();
        per_threshold.push(ThresholdStats {
            t_iou: tm.t_iou,
            precision: mean_std(&collect(&|b| b.precision)),
            recall: mean_std(&collect(&|b| b.recall)),
            f1: mean_std(&collect(&|b| b.f1)),
            per_category_f1,
        });
    }
    Ok(MultiSeedSummary { n_reports: reports.len(), per_threshold })
}
