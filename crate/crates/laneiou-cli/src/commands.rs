//! Subcommand implementations: thin wiring from files and flags onto the
//! library operations, with deterministic outputs (no timestamps, sorted
//! maps, fixed float formatting).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use laneiou::assign::{angle_bin_stats, angle_bins_to_csv, bin_count_variance, AssignConfig, Similarity};
use laneiou::eval::{crossval_threshold, evaluate, EvalConfig, EvalReport, Frame, IoUBackend};
use laneiou::io::{
    filter_redundant, parse_curvelanes_json, parse_lines_file, parse_list_file,
    parse_mean_sidecar, report_to_csv, report_to_json, ParsedLines, PredictionDump,
};
use laneiou::iou::IoUConfig;
use laneiou::lane::{resample_to_grid, Polyline, RowGrid};
use laneiou::raster::MaskSpec;
use laneiou::synth::{
    correlation_study, correlation_to_csv, generate, generate_correlation_pairs,
    generate_isotropic_assignment_set, oracle_experiment, OracleMode, SynthConfig,
};

use crate::opts::{
    parse_float_list, parse_resolution, parse_thresholds, resolve, AssignOpts, CommonOpts,
    EvalOpts, FileConfig, GridOpts, MaskOpts, SynthNoiseOpts,
};
use crate::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::input(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn build_grid(file: &FileConfig, flags: &GridOpts, defaults: (usize, f64, f64)) -> Result<RowGrid, CliError> {
    let n_rows = resolve(file.n_rows, flags.n_rows, defaults.0);
    let ref_width = resolve(file.ref_width, flags.ref_width, defaults.1);
    let ref_height = resolve(file.ref_height, flags.ref_height, defaults.2);
    Ok(RowGrid::new(n_rows, ref_width, ref_height)?)
}

fn build_mask_spec(file: &FileConfig, flags: &MaskOpts) -> Result<MaskSpec, CliError> {
    let width = resolve(file.mask_width, flags.mask_width, 30);
    let res_text = resolve(file.mask_res.clone(), flags.mask_res.clone(), "1640x590".to_string());
    Ok(MaskSpec::new(width, parse_resolution(&res_text)?)?)
}

fn build_eval_config(
    file: &FileConfig,
    eval: &EvalOpts,
    mask_spec: MaskSpec,
) -> Result<EvalConfig, CliError> {
    let t_iou_text = resolve(file.t_iou.clone(), eval.t_iou.clone(), "0.5,0.75".to_string());
    let t_iou = parse_float_list(&t_iou_text)?;
    let backend_text = resolve(file.backend.clone(), eval.backend.clone(), "mask_oracle".into());
    let backend = match backend_text.as_str() {
        "mask_oracle" => IoUBackend::MaskOracle,
        "lane_iou" => IoUBackend::LaneIoU,
        other => return Err(CliError::input(format!("unknown backend {other:?}"))),
    };
    let (mask_w, _) = mask_spec.resolution();
    let default_w_lane = mask_spec.width_px() as f64 / mask_w as f64;
    let w_lane = resolve(file.w_lane, eval.w_lane, default_w_lane);
    Ok(EvalConfig {
        t_iou,
        backend,
        mask_spec,
        lane_cfg: IoUConfig::lane_iou(w_lane).with_clip(true),
        conf_threshold: resolve(file.conf_threshold, eval.conf_threshold, 0.5),
    })
}

fn build_assign_config(file: &FileConfig, flags: &AssignOpts, similarity: Similarity) -> AssignConfig {
    let d = AssignConfig::culane();
    AssignConfig {
        k_max: resolve(file.k_max, flags.k_max, d.k_max),
        w_lane_k: resolve(file.w_lane_k, flags.w_lane_k, d.w_lane_k),
        w_lane_cost: resolve(file.w_lane_cost, flags.w_lane_cost, d.w_lane_cost),
        lambda: resolve(file.lambda, flags.lambda, d.lambda),
        focal_alpha: resolve(file.focal_alpha, flags.focal_alpha, d.focal_alpha),
        focal_gamma: resolve(file.focal_gamma, flags.focal_gamma, d.focal_gamma),
        similarity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtFormat {
    CuLane,
    CurveLanes,
}

impl GtFormat {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "culane" => Ok(Self::CuLane),
            "curvelanes" => Ok(Self::CurveLanes),
            other => Err(CliError::input(format!("unknown annotation format {other:?}"))),
        }
    }
}

/// Annotation path for an image: CULane keeps `.lines.txt` beside the image,
/// CurveLanes keeps `.lines.json` under a parallel `labels/` tree.
fn gt_path(gt_root: &Path, image_path: &str, format: GtFormat) -> PathBuf {
    let stem = match image_path.rfind('.') {
        Some(dot) if !image_path[dot + 1..].contains('/') => &image_path[..dot],
        _ => image_path,
    };
    match format {
        GtFormat::CuLane => gt_root.join(format!("{stem}.lines.txt")),
        GtFormat::CurveLanes => {
            let stem = stem
                .strip_prefix("images/")
                .map(|rest| format!("labels/{rest}"))
                .unwrap_or_else(|| stem.to_string());
            gt_root.join(format!("{stem}.lines.json"))
        }
    }
}

fn parse_categories(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (line_no == 0 && line == "path,category") {
            continue;
        }
        let (path, category) = line.rsplit_once(',').ok_or_else(|| {
            CliError::input(format!("bad category line {}: expected `path,category`", line_no + 1))
        })?;
        map.insert(path.trim_start_matches('/').to_string(), category.trim().to_string());
    }
    Ok(map)
}

fn load_frames(
    list: &Path,
    gt_root: &Path,
    preds: &Path,
    categories: Option<&Path>,
    gt_res: (f64, f64),
    gt_format: GtFormat,
    grid: &RowGrid,
) -> Result<Vec<Frame>, CliError> {
    let stubs = parse_list_file(&read_text(list)?)?;
    let dump = PredictionDump::from_json(&read_text(preds)?)?;
    // Predictions for frames outside the list are ignored (evaluating a
    // filtered subset is the normal workflow); a dump sharing no key at all
    // with the list means the wrong file pair was passed.
    let known: std::collections::HashSet<&str> = stubs.iter().map(|s| s.path.as_str()).collect();
    let unused = dump.frames.keys().filter(|k| !known.contains(k.as_str())).count();
    if unused == dump.frames.len() && !dump.frames.is_empty() {
        let sample = dump.frames.keys().next().unwrap().clone();
        return Err(laneiou::Error::FrameKeyMismatch(sample).into());
    }
    if unused > 0 {
        println!("note: ignoring predictions for {unused} frame(s) not in the list");
    }
    let categories = match categories {
        Some(path) => parse_categories(&read_text(path)?)?,
        None => BTreeMap::new(),
    };

    let mut frames = Vec::with_capacity(stubs.len());
    for stub in stubs {
        let gt_file = gt_path(gt_root, &stub.path, gt_format);
        let text = read_text(&gt_file)?;
        let parsed: ParsedLines = match gt_format {
            GtFormat::CuLane => parse_lines_file(&text, gt_res.0, gt_res.1),
            GtFormat::CurveLanes => parse_curvelanes_json(&text, gt_res.0, gt_res.1),
        }
        .map_err(|e| CliError::input(format!("{}: {e}", gt_file.display())))?;
        let gts = parsed
            .lanes
            .iter()
            .map(|poly| resample_to_grid(poly, grid))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::input(format!("{}: {e}", gt_file.display())))?;

        let mut pred_lanes = Vec::new();
        if let Some(entries) = dump.frames.get(&stub.path) {
            for entry in entries {
                if !(0.0..=1.0).contains(&entry.confidence) {
                    return Err(CliError::input(format!(
                        "{}: confidence {} outside [0, 1]",
                        stub.path, entry.confidence
                    )));
                }
                let poly =
                    Polyline::new(entry.points.clone(), entry.image_width, entry.image_height)
                        .map_err(|e| CliError::input(format!("{}: {e}", stub.path)))?;
                let lane = resample_to_grid(&poly, grid)
                    .map_err(|e| CliError::input(format!("{}: {e}", stub.path)))?;
                pred_lanes.push(lane.with_confidence(entry.confidence));
            }
        }
        frames.push(Frame {
            category: categories.get(&stub.path).cloned(),
            id: stub.path,
            video: stub.video,
            gts,
            preds: pred_lanes,
        });
    }
    Ok(frames)
}

fn print_report(report: &EvalReport) {
    for tm in &report.thresholds {
        let o = &tm.overall;
        println!(
            "t_iou {:.2}  tp {}  fp {}  fn {}  precision {:.4}  recall {:.4}  f1 {:.4}",
            tm.t_iou, o.tp, o.fp, o.fn_count, o.precision, o.recall, o.f1
        );
        for (cat, block) in &tm.per_category {
            if block.reports_fp_only() {
                // No GT lanes in this category; FP count is the figure.
                println!("  {cat}: FP {}", block.fp);
            } else {
                println!("  {cat}: f1 {:.4}", block.f1);
            }
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Prediction dump (JSON).
    #[arg(long, value_name = "FILE")]
    pub preds: PathBuf,
    /// Root directory of the `.lines.txt` annotations.
    #[arg(long, value_name = "DIR")]
    pub gt_root: PathBuf,
    /// Split list file (one image path per line).
    #[arg(long, value_name = "FILE")]
    pub list: PathBuf,
    /// Optional `path,category` CSV with scene categories.
    #[arg(long, value_name = "FILE")]
    pub categories: Option<PathBuf>,
    /// Annotation resolution WxH [default: 1640x590].
    #[arg(long, value_name = "WxH")]
    pub gt_res: Option<String>,
    /// Annotation format: culane (.lines.txt beside images) or curvelanes
    /// (.lines.json under labels/) [default: culane].
    #[arg(long)]
    pub gt_format: Option<String>,
    /// Output directory for report.json / report.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub grid: GridOpts,
    #[command(flatten)]
    pub mask: MaskOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
}

pub fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    let grid = build_grid(file, &args.grid, (72, 1640.0, 590.0))?;
    let mask_spec = build_mask_spec(file, &args.mask)?;
    let cfg = build_eval_config(file, &args.eval, mask_spec)?;
    let gt_res_text = resolve(file.gt_res.clone(), args.gt_res.clone(), "1640x590".into());
    let (gw, gh) = parse_resolution(&gt_res_text)?;
    let gt_format = GtFormat::parse(&resolve(
        file.gt_format.clone(),
        args.gt_format.clone(),
        "culane".into(),
    ))?;
    let frames = load_frames(
        &args.list,
        &args.gt_root,
        &args.preds,
        args.categories.as_deref(),
        (gw as f64, gh as f64),
        gt_format,
        &grid,
    )?;
    let report = evaluate(&frames, &grid, &cfg)?;
    write_output(&args.out_dir.join("report.json"), &report_to_json(&report))?;
    write_output(&args.out_dir.join("report.csv"), &report_to_csv(&report))?;
    print_report(&report);
    Ok(())
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    /// Prediction dump (JSON) over the train split.
    #[arg(long, value_name = "FILE")]
    pub preds: PathBuf,
    /// Root directory of the `.lines.txt` annotations.
    #[arg(long, value_name = "DIR")]
    pub gt_root: PathBuf,
    /// Train split list file.
    #[arg(long, value_name = "FILE")]
    pub list: PathBuf,
    /// Annotation resolution WxH [default: 1640x590].
    #[arg(long, value_name = "WxH")]
    pub gt_res: Option<String>,
    /// Annotation format: culane or curvelanes [default: culane].
    #[arg(long)]
    pub gt_format: Option<String>,
    /// Number of folds over videos [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Candidate thresholds: comma list or start:end:step
    /// [default: 0.05:0.95:0.05].
    #[arg(long, value_name = "SPEC")]
    pub thresholds: Option<String>,
    /// Fold split seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for crossval.json / crossval_curves.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub grid: GridOpts,
    #[command(flatten)]
    pub mask: MaskOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
}

pub fn cmd_crossval(args: &CrossvalArgs, file: &FileConfig) -> Result<(), CliError> {
    let grid = build_grid(file, &args.grid, (72, 1640.0, 590.0))?;
    let mask_spec = build_mask_spec(file, &args.mask)?;
    let cfg = build_eval_config(file, &args.eval, mask_spec)?;
    let gt_res_text = resolve(file.gt_res.clone(), args.gt_res.clone(), "1640x590".into());
    let (gw, gh) = parse_resolution(&gt_res_text)?;
    let gt_format = GtFormat::parse(&resolve(
        file.gt_format.clone(),
        args.gt_format.clone(),
        "culane".into(),
    ))?;
    let frames = load_frames(
        &args.list,
        &args.gt_root,
        &args.preds,
        None,
        (gw as f64, gh as f64),
        gt_format,
        &grid,
    )?;
    let folds = resolve(file.folds, args.folds, 5);
    let seed = resolve(file.seed, args.seed, 0);
    let spec = resolve(file.thresholds.clone(), args.thresholds.clone(), "0.05:0.95:0.05".into());
    let thresholds = parse_thresholds(&spec)?;
    let result = crossval_threshold(&frames, &grid, &cfg, folds, &thresholds, seed)?;

    let mut json = serde_json::to_string_pretty(&result).expect("crossval serialization");
    json.push('\n');
    write_output(&args.out_dir.join("crossval.json"), &json)?;

    let mut csv = String::from("threshold,mean_f1");
    for fold in 0..folds {
        csv.push_str(&format!(",fold_{fold}"));
    }
    csv.push('\n');
    for (k, t) in result.thresholds.iter().enumerate() {
        csv.push_str(&format!("{:.12},{:.12}", t, result.mean_f1[k]));
        for fold in 0..folds {
            csv.push_str(&format!(",{:.12}", result.per_fold_f1[fold][k]));
        }
        csv.push('\n');
    }
    write_output(&args.out_dir.join("crossval_curves.csv"), &csv)?;
    println!("best confidence threshold: {}", result.best_threshold);
    Ok(())
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Split list file to filter.
    #[arg(long, value_name = "FILE")]
    pub list: PathBuf,
    /// Sidecar CSV of per-frame mean pixel values (`path,mean`).
    #[arg(long, value_name = "FILE")]
    pub means: PathBuf,
    /// Mean-difference threshold below which a frame is redundant
    /// [default: 15, the validated CULane setting].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output list file (original line text of the kept frames).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
}

pub fn cmd_filter_frames(args: &FilterArgs, file: &FileConfig) -> Result<(), CliError> {
    let text = read_text(&args.list)?;
    let stubs = parse_list_file(&text)?;
    let means = parse_mean_sidecar(&read_text(&args.means)?)?;
    let threshold = resolve(file.threshold, args.threshold, 15.0);
    let kept = filter_redundant(&stubs, &means, threshold)?;
    let kept_paths: std::collections::HashSet<&str> =
        kept.iter().map(|s| s.path.as_str()).collect();

    // Preserve the original line text (extra columns and all) of kept frames;
    // non-empty lines align 1:1 with parsed stubs.
    let mut out = String::new();
    let mut stub_iter = stubs.iter();
    for raw in text.lines() {
        if raw.trim().is_empty() {
            continue;
        }
        let stub = stub_iter.next().expect("line/stub alignment");
        if kept_paths.contains(stub.path.as_str()) {
            out.push_str(raw);
            out.push('\n');
        }
    }
    write_output(&args.out, &out)?;
    println!("kept {} of {} frames at threshold {}", kept.len(), stubs.len(), threshold);
    Ok(())
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of lane pairs [default: 2000].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Smallest GT angle in degrees [default: 20].
    #[arg(long)]
    pub angle_min: Option<f64>,
    /// Largest GT angle in degrees [default: 160].
    #[arg(long)]
    pub angle_max: Option<f64>,
    /// Output directory for correlation.csv / correlation_summary.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub grid: GridOpts,
    #[command(flatten)]
    pub mask: MaskOpts,
}

#[derive(Serialize)]
struct CorrelationSummary {
    n_pairs: usize,
    skipped: usize,
    pearson_lane_iou: f64,
    pearson_line_iou: f64,
}

pub fn cmd_correlate(args: &CorrelateArgs, file: &FileConfig) -> Result<(), CliError> {
    let grid = build_grid(file, &args.grid, (72, 1640.0, 590.0))?;
    let mask_spec = build_mask_spec(file, &args.mask)?;
    let seed = resolve(file.seed, args.seed, 0);
    let n_pairs = resolve(file.pairs, args.pairs, 2000);
    let angle_min = resolve(file.angle_min, args.angle_min, 20.0);
    let angle_max = resolve(file.angle_max, args.angle_max, 160.0);
    let (mask_w, _) = mask_spec.resolution();
    let w_lane_px = mask_spec.width_px() as f64;

    let pairs =
        generate_correlation_pairs(seed, n_pairs, (angle_min, angle_max), w_lane_px, &grid);
    let study = correlation_study(&pairs, &grid, w_lane_px / mask_w as f64, &mask_spec)?;
    write_output(&args.out_dir.join("correlation.csv"), &correlation_to_csv(&study))?;
    let summary = CorrelationSummary {
        n_pairs: study.rows.len(),
        skipped: study.skipped,
        pearson_lane_iou: study.pearson_lane,
        pearson_line_iou: study.pearson_line,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialization");
    json.push('\n');
    write_output(&args.out_dir.join("correlation_summary.json"), &json)?;
    println!(
        "pearson vs mask IoU: lane_iou {:.4}, line_iou {:.4} ({} pairs, {} skipped)",
        study.pearson_lane,
        study.pearson_line,
        study.rows.len(),
        study.skipped
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct AssignStatsArgs {
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of synthetic frames [default: 100].
    #[arg(long)]
    pub frames: Option<usize>,
    /// Ground truths per frame [default: 2].
    #[arg(long)]
    pub gts_per_frame: Option<usize>,
    /// Similarity for dynamic-k and cost: lane_iou or baseline
    /// (constant-width) [default: lane_iou].
    #[arg(long)]
    pub similarity: Option<String>,
    /// Angle bin width in degrees [default: 10].
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Smallest GT angle in degrees [default: 20].
    #[arg(long)]
    pub angle_min: Option<f64>,
    /// Largest GT angle in degrees [default: 160].
    #[arg(long)]
    pub angle_max: Option<f64>,
    /// Output directory for assign_stats.csv / assign_stats_summary.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub grid: GridOpts,
    #[command(flatten)]
    pub mask: MaskOpts,
    #[command(flatten)]
    pub assign: AssignOpts,
}

#[derive(Serialize)]
struct AssignStatsSummary {
    similarity: String,
    bin_width_deg: f64,
    n_bins: usize,
    /// Variance of the per-bin mean assignment counts over [20, 160) deg;
    /// the homogeneity figure compared between similarities.
    count_variance_20_160: f64,
}

pub fn cmd_assign_stats(args: &AssignStatsArgs, file: &FileConfig) -> Result<(), CliError> {
    let grid = build_grid(file, &args.grid, (72, 800.0, 320.0))?;
    let mask_spec = build_mask_spec(file, &args.mask)?;
    let seed = resolve(file.seed, args.seed, 0);
    let n_frames = resolve(file.frames, args.frames, 100);
    let gts_per_frame = resolve(file.gts_per_frame, args.gts_per_frame, 2);
    let bin_width = resolve(file.bin_width, args.bin_width, 10.0);
    let angle_min = resolve(file.angle_min, args.angle_min, 20.0);
    let angle_max = resolve(file.angle_max, args.angle_max, 160.0);
    let similarity_text =
        resolve(file.similarity.clone(), args.similarity.clone(), "lane_iou".into());
    let similarity = match similarity_text.as_str() {
        "lane_iou" => Similarity::LaneIoU,
        "baseline" => Similarity::Baseline,
        other => return Err(CliError::input(format!("unknown similarity {other:?}"))),
    };
    let cfg = build_assign_config(file, &args.assign, similarity);

    let offsets = [-10.0, -7.0, -4.0, -2.0, 2.0, 4.0, 7.0, 10.0];
    let frames = generate_isotropic_assignment_set(
        seed,
        n_frames,
        gts_per_frame,
        (angle_min, angle_max),
        &offsets,
        &grid,
    )?;
    let rows = angle_bin_stats(&frames, &grid, &cfg, &mask_spec, bin_width)?;
    write_output(&args.out_dir.join("assign_stats.csv"), &angle_bins_to_csv(&rows))?;
    let variance = bin_count_variance(&rows, 20.0, 160.0);
    let summary = AssignStatsSummary {
        similarity: similarity_text,
        bin_width_deg: bin_width,
        n_bins: rows.len(),
        count_variance_20_160: variance,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialization");
    json.push('\n');
    write_output(&args.out_dir.join("assign_stats_summary.json"), &json)?;
    println!(
        "assignment-count variance over angle bins [20, 160): {variance:.6} ({} similarity)",
        summary.similarity
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Component to replace with ground-truth-derived values:
    /// confidence, anchor or length.
    #[arg(long)]
    pub mode: Option<String>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of synthetic frames [default: 60].
    #[arg(long)]
    pub frames: Option<usize>,
    /// Smallest GT angle in degrees [default: 30].
    #[arg(long)]
    pub angle_min: Option<f64>,
    /// Largest GT angle in degrees [default: 150].
    #[arg(long)]
    pub angle_max: Option<f64>,
    /// Output file for the raw-vs-oracle report pair.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub grid: GridOpts,
    #[command(flatten)]
    pub mask: MaskOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
    #[command(flatten)]
    pub noise: SynthNoiseOpts,
}

#[derive(Serialize)]
struct OracleOutput {
    mode: String,
    raw: EvalReport,
    oracle: EvalReport,
}

pub fn cmd_oracle(args: &OracleArgs, file: &FileConfig) -> Result<(), CliError> {
    let grid = build_grid(file, &args.grid, (72, 1640.0, 590.0))?;
    let mask_spec = build_mask_spec(file, &args.mask)?;
    let cfg = build_eval_config(file, &args.eval, mask_spec)?;
    let mode_text = resolve(file.mode.clone(), args.mode.clone(), "confidence".into());
    let mode = match mode_text.as_str() {
        "confidence" => OracleMode::Confidence,
        "anchor" => OracleMode::Anchor,
        "length" => OracleMode::Length,
        other => return Err(CliError::input(format!("unknown oracle mode {other:?}"))),
    };
    let synth = SynthConfig {
        seed: resolve(file.seed, args.seed, 0),
        n_frames: resolve(file.frames, args.frames, 60),
        frames_per_video: resolve(file.frames_per_video, args.noise.frames_per_video, 4),
        lanes_per_frame: (
            resolve(file.lanes_min, args.noise.lanes_min, 2),
            resolve(file.lanes_max, args.noise.lanes_max, 4),
        ),
        angle_range_deg: (
            resolve(file.angle_min, args.angle_min, 30.0),
            resolve(file.angle_max, args.angle_max, 150.0),
        ),
        curvature_range: (-0.1, 0.1),
        x_jitter: resolve(file.x_jitter, args.noise.x_jitter, 0.003),
        angle_jitter_deg: resolve(file.angle_jitter, args.noise.angle_jitter, 3.5),
        length_jitter: resolve(file.length_jitter, args.noise.length_jitter, 0.06),
        conf_noise: resolve(file.conf_noise, args.noise.conf_noise, 0.3),
        fp_rate: resolve(file.fp_rate, args.noise.fp_rate, 1.5),
        mask_spec: cfg.mask_spec,
    };
    let frames = generate(&synth, &grid)?;
    let raw = evaluate(&frames, &grid, &cfg)?;
    let oracle = oracle_experiment(&frames, mode, &grid, &cfg)?;
    for (label, report) in [("raw", &raw), ("oracle", &oracle)] {
        for tm in &report.thresholds {
            println!("{label:>6}  t_iou {:.2}  f1 {:.4}", tm.t_iou, tm.overall.f1);
        }
    }
    let output = OracleOutput { mode: mode_text, raw, oracle };
    let mut json = serde_json::to_string_pretty(&output).expect("oracle serialization");
    json.push('\n');
    write_output(&args.out_dir.join("oracle.json"), &json)?;
    Ok(())
}
