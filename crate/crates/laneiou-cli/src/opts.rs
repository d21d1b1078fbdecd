//! Shared option groups and the config-file override layer.
//!
//! Precedence: a key present in the `--config` TOML file overrides the
//! matching flag, and flags override the built-in defaults. All defaults
//! mirror the CULane benchmark conventions (30 px metric masks at 1640x590,
//! virtual widths 15/800 and 60/800, frame-filter threshold 15).

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Keys mirror the long flag names with `-` replaced by `_`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub n_rows: Option<usize>,
    pub ref_width: Option<f64>,
    pub ref_height: Option<f64>,
    pub mask_width: Option<u32>,
    pub mask_res: Option<String>,
    pub gt_res: Option<String>,
    pub gt_format: Option<String>,
    pub w_lane: Option<f64>,
    pub w_lane_k: Option<f64>,
    pub w_lane_cost: Option<f64>,
    pub t_iou: Option<String>,
    pub conf_threshold: Option<f64>,
    pub backend: Option<String>,
    pub k_max: Option<usize>,
    pub lambda: Option<f64>,
    pub focal_alpha: Option<f64>,
    pub focal_gamma: Option<f64>,
    pub similarity: Option<String>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub frames: Option<usize>,
    pub gts_per_frame: Option<usize>,
    pub bin_width: Option<f64>,
    pub angle_min: Option<f64>,
    pub angle_max: Option<f64>,
    pub folds: Option<usize>,
    pub thresholds: Option<String>,
    pub threshold: Option<f64>,
    pub mode: Option<String>,
    pub lanes_min: Option<usize>,
    pub lanes_max: Option<usize>,
    pub frames_per_video: Option<usize>,
    pub x_jitter: Option<f64>,
    pub angle_jitter: Option<f64>,
    pub length_jitter: Option<f64>,
    pub conf_noise: Option<f64>,
    pub fp_rate: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::input(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::input(format!("bad config {}: {e}", path.display()))
                })
            }
        }
    }
}

/// Config-over-flag-over-default resolution.
pub fn resolve<T>(file: Option<T>, flag: Option<T>, default: T) -> T {
    file.or(flag).unwrap_or(default)
}

#[derive(Args, Debug)]
pub struct CommonOpts {
    /// TOML config file; keys mirror the long flag names (underscored) and
    /// take precedence over flags.
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for frame-level parallelism; 0 means one per core
    /// [default: 0].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GridOpts {
    /// Lane grid rows [default: 72].
    #[arg(long)]
    pub n_rows: Option<usize>,
    /// Reference frame width in px for tilt math [default: 1640 (CULane
    /// metric frame); assign-stats uses 800 (CULane training frame)].
    #[arg(long)]
    pub ref_width: Option<f64>,
    /// Reference frame height in px [default: 590; assign-stats 320].
    #[arg(long)]
    pub ref_height: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MaskOpts {
    /// Metric stroke width in px [default: 30, the CULane metric width].
    #[arg(long)]
    pub mask_width: Option<u32>,
    /// Metric mask resolution WxH [default: 1640x590, the CULane metric
    /// resolution].
    #[arg(long, value_name = "WxH")]
    pub mask_res: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalOpts {
    /// Comma-separated IoU thresholds for TP counting [default: 0.5,0.75].
    #[arg(long, value_name = "LIST")]
    pub t_iou: Option<String>,
    /// Confidence threshold applied before matching [default: 0.5; select
    /// one with crossval-threshold].
    #[arg(long)]
    pub conf_threshold: Option<f64>,
    /// IoU backend: mask_oracle (the metric definition) or lane_iou
    /// (fast approximation) [default: mask_oracle].
    #[arg(long)]
    pub backend: Option<String>,
    /// Virtual lane width (fraction of reference width) for the lane_iou
    /// backend [default: 30/1640].
    #[arg(long)]
    pub w_lane: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AssignOpts {
    /// Max positive anchors per ground truth [default: 4].
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Virtual width for dynamic-k [default: 15/800, the CULane setting].
    #[arg(long)]
    pub w_lane_k: Option<f64>,
    /// Virtual width for the assignment cost [default: 60/800, the CULane
    /// setting].
    #[arg(long)]
    pub w_lane_cost: Option<f64>,
    /// Classification-cost weight [default: 1.0; CurveLanes uses 2.5].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Focal loss alpha [default: 0.25].
    #[arg(long)]
    pub focal_alpha: Option<f64>,
    /// Focal loss gamma [default: 2].
    #[arg(long)]
    pub focal_gamma: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SynthNoiseOpts {
    /// Lanes per frame, lower bound [default: 2].
    #[arg(long)]
    pub lanes_min: Option<usize>,
    /// Lanes per frame, upper bound [default: 4].
    #[arg(long)]
    pub lanes_max: Option<usize>,
    /// Frames per synthetic video [default: 4].
    #[arg(long)]
    pub frames_per_video: Option<usize>,
    /// Std dev of the start-x jitter in normalized units [default: 0.003].
    #[arg(long)]
    pub x_jitter: Option<f64>,
    /// Std dev of the angle jitter in degrees [default: 3.5].
    #[arg(long)]
    pub angle_jitter: Option<f64>,
    /// Std dev of the relative length jitter [default: 0.06].
    #[arg(long)]
    pub length_jitter: Option<f64>,
    /// Std dev of the confidence noise around the true metric IoU
    /// [default: 0.3].
    #[arg(long)]
    pub conf_noise: Option<f64>,
    /// Expected spurious lanes per frame [default: 1.5].
    #[arg(long)]
    pub fp_rate: Option<f64>,
}

pub fn parse_resolution(text: &str) -> Result<(u32, u32), CliError> {
    let (w, h) = text
        .split_once('x')
        .ok_or_else(|| CliError::input(format!("bad resolution {text:?}, expected WxH")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| CliError::input(format!("bad resolution component {s:?}")))
    };
    Ok((parse(w)?, parse(h)?))
}

pub fn parse_float_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("bad float {s:?} in list")))
        })
        .collect()
}

/// Candidate thresholds: either a comma list (`0.2,0.3,0.4`) or a range
/// `start:end:step` (end inclusive up to rounding).
pub fn parse_thresholds(text: &str) -> Result<Vec<f64>, CliError> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::input(format!(
                "bad threshold range {text:?}, expected start:end:step"
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("bad range component {s:?}")))
        };
        let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || end < start {
            return Err(CliError::input("threshold range must ascend".into()));
        }
        let n = ((end - start) / step).round() as usize;
        Ok((0..=n).map(|k| start + k as f64 * step).filter(|t| *t <= end + 1e-12).collect())
    } else {
        let list = parse_float_list(text)?;
        if list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::input("thresholds must be strictly ascending".into()));
        }
        Ok(list)
    }
}
