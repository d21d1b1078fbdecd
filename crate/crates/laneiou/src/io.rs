//! CULane-format ingestion, redundant-frame filtering and report persistence.
//!
//! Image decoding is deliberately kept out of the crate: the redundant-frame
//! filter consumes a sidecar CSV of precomputed per-frame mean pixel values
//! instead of reading images.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalReport, MetricBlock, REPORT_SCHEMA_VERSION};
use crate::lane::{lane_to_polyline, Lane, Polyline, RowGrid};

/// One entry of a split list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameStub {
    /// Normalized relative path (no leading slash).
    pub path: String,
    /// Directory prefix of the path; CULane encodes the source video there.
    pub video: String,
}

/// Video/sequence id of a frame path: everything before the file name.
pub fn video_id(path: &str) -> String {
    match path.rfind('/') {
        Some(idx) => path[..idx].to_string(),
        None => String::new(),
    }
}

/// Parses a split list file: one image path per line, extra whitespace-
/// separated columns ignored, duplicates rejected.
pub fn parse_list_file(text: &str) -> Result<Vec<FrameStub>> {
    let mut stubs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let path = line.split_whitespace().next().unwrap().trim_start_matches('/').to_string();
        if !seen.insert(path.clone()) {
            return Err(Error::DuplicatePath(path));
        }
        stubs.push(FrameStub { video: video_id(&path), path });
    }
    Ok(stubs)
}

/// Parsed `.lines.txt` annotation file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLines {
    pub lanes: Vec<Polyline>,
    /// Lines dropped for having fewer than 2 usable points.
    pub dropped: usize,
}

/// Parses the CULane lines format: per text line, whitespace-separated
/// alternating `x y` floats. Points with negative x (the format's
/// missing-point sentinel) are dropped; lines left with fewer than 2 points
/// are dropped and counted. The source resolution is supplied by the caller
/// because the format does not carry it.
pub fn parse_lines_file(text: &str, image_width: f64, image_height: f64) -> Result<ParsedLines> {
    let mut lanes = Vec::new();
    let mut dropped = 0usize;
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens.len().is_multiple_of(2) {
            return Err(Error::Parse {
                line: line_no + 1,
                message: format!("odd token count {}", tokens.len()),
            });
        }
        let mut points = Vec::with_capacity(tokens.len() / 2);
        for pair in tokens.chunks(2) {
            let x: f64 = pair[0].parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("bad float {:?}", pair[0]),
            })?;
            let y: f64 = pair[1].parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("bad float {:?}", pair[1]),
            })?;
            if x < 0.0 {
                continue;
            }
            points.push((x, y));
        }
        if points.len() < 2 {
            dropped += 1;
            continue;
        }
        match Polyline::new(points, image_width, image_height) {
            Ok(poly) => lanes.push(poly),
            Err(Error::InvalidAnnotation(msg)) => {
                return Err(Error::Parse { line: line_no + 1, message: msg })
            }
            Err(err) => return Err(err),
        }
    }
    Ok(ParsedLines { lanes, dropped })
}

/// Serializes polylines back to the lines format. Values round-trip through
/// `parse_lines_file` exactly (shortest-round-trip float printing).
pub fn serialize_lines_file(lanes: &[Polyline]) -> String {
    let mut out = String::new();
    for lane in lanes {
        let mut first = true;
        for (x, y) in lane.points() {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{x} {y}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct CurveLanesPoint {
    x: String,
    y: String,
}

#[derive(Deserialize)]
struct CurveLanesFile {
    #[serde(rename = "Lines")]
    lines: Vec<Vec<CurveLanesPoint>>,
}

/// Converts the CurveLanes JSON annotation flavor to polylines:
/// `{"Lines": [[{"x": "603.5", "y": "1431.0"}, ...], ...]}` with
/// string-valued coordinates. Lanes with fewer than 2 points or lanes that
/// are not single-valued in y (unrepresentable in the row-based model) are
/// dropped and counted. The source resolution is supplied by the caller.
pub fn parse_curvelanes_json(
    text: &str,
    image_width: f64,
    image_height: f64,
) -> Result<ParsedLines> {
    let file: CurveLanesFile =
        serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    let mut lanes = Vec::new();
    let mut dropped = 0usize;
    for line in file.lines {
        let mut points = Vec::with_capacity(line.len());
        let mut bad_value = false;
        for p in &line {
            let (Ok(x), Ok(y)) = (p.x.trim().parse::<f64>(), p.y.trim().parse::<f64>()) else {
                bad_value = true;
                break;
            };
            if x.is_finite() && y.is_finite() {
                points.push((x, y));
            }
        }
        if bad_value {
            return Err(Error::InvalidAnnotation("non-numeric CurveLanes coordinate".into()));
        }
        if points.len() < 2 {
            dropped += 1;
            continue;
        }
        match Polyline::new(points, image_width, image_height) {
            Ok(poly) => lanes.push(poly),
            // Near-horizontal hooks occur in real CurveLanes data; they are
            // rejected by the row-based model, not a corrupt file.
            Err(Error::InvalidAnnotation(_)) => dropped += 1,
            Err(err) => return Err(err),
        }
    }
    Ok(ParsedLines { lanes, dropped })
}

/// Parses the mean-pixel sidecar CSV: `path,mean` per line, optional exact
/// header. Paths may contain commas; the split is on the last comma.
pub fn parse_mean_sidecar(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut means = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (line_no == 0 && line == "path,mean") {
            continue;
        }
        let (path, value) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
            line: line_no + 1,
            message: "expected `path,mean`".into(),
        })?;
        let mean: f64 = value.trim().parse().map_err(|_| Error::Parse {
            line: line_no + 1,
            message: format!("bad mean value {value:?}"),
        })?;
        means.insert(path.trim_start_matches('/').to_string(), mean);
    }
    Ok(means)
}

/// Drops stationary-scene duplicates: within each video, frame `t` is dropped
/// when `|mean(t) - mean(t-1)| < threshold` against the immediately preceding
/// frame in list order (the original predecessor, kept or not). The first
/// frame of every video is always kept; videos are never compared across.
///
/// Single-pass semantics: re-running on the filtered output recomputes diffs
/// against surviving predecessors and may drop more.
pub fn filter_redundant(
    stubs: &[FrameStub],
    means: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<Vec<FrameStub>> {
    let missing: Vec<String> = stubs
        .iter()
        .filter(|s| !means.contains_key(&s.path))
        .map(|s| s.path.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPixelStats(missing));
    }
    let mut kept = Vec::new();
    let mut prev: BTreeMap<&str, f64> = BTreeMap::new();
    for stub in stubs {
        let mean = means[&stub.path];
        let keep = match prev.get(stub.video.as_str()) {
            Some(&prev_mean) => (mean - prev_mean).abs() >= threshold,
            None => true,
        };
        prev.insert(stub.video.as_str(), mean);
        if keep {
            kept.push(stub.clone());
        }
    }
    Ok(kept)
}

pub const DUMP_SCHEMA_VERSION: u32 = 1;

/// Detector output for one lane: the polyline in source pixels plus score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub points: Vec<(f64, f64)>,
    pub image_width: f64,
    pub image_height: f64,
    pub confidence: f64,
}

/// Detector output for a set of frames, keyed by the frame path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionDump {
    pub schema_version: u32,
    pub frames: BTreeMap<String, Vec<PredictionEntry>>,
}

impl Default for PredictionDump {
    fn default() -> Self {
        Self::new()
    }
}

fn json_error(text: &str, err: &serde_json::Error) -> Error {
    let (line, column) = (err.line(), err.column());
    // serde_json reports 1-based line/column; recover the byte offset.
    let offset = text
        .lines()
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum::<usize>()
        + column.saturating_sub(1);
    Error::Json { line, column, offset, message: err.to_string() }
}

impl PredictionDump {
    pub fn new() -> Self {
        Self { schema_version: DUMP_SCHEMA_VERSION, frames: BTreeMap::new() }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dump serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
        if dump.schema_version != DUMP_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: dump.schema_version,
                expected: DUMP_SCHEMA_VERSION,
            });
        }
        Ok(dump)
    }
}

/// Converts a lane to a dump entry at the grid's reference resolution.
/// Returns None for lanes with fewer than 2 valid rows.
pub fn lane_to_entry(lane: &Lane, grid: &RowGrid) -> Option<PredictionEntry> {
    let poly = lane_to_polyline(lane, grid).ok()?;
    Some(PredictionEntry {
        points: poly.points().to_vec(),
        image_width: poly.image_width(),
        image_height: poly.image_height(),
        confidence: lane.confidence(),
    })
}

pub fn report_to_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization");
    s.push('\n');
    s
}

pub fn report_from_json(text: &str) -> Result<EvalReport> {
    let report: EvalReport = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: report.schema_version,
            expected: REPORT_SCHEMA_VERSION,
        });
    }
    Ok(report)
}

pub const REPORT_CSV_HEADER: &str = "threshold,t_iou,tp,fp,fn,precision,recall,f1,category";

/// Report as CSV in the fixed column order
/// `threshold,t_iou,tp,fp,fn,precision,recall,f1,category`. Per IoU
/// threshold, the overall row comes first (category `all`) followed by the
/// categories in sorted order. Floats carry 12 decimals so values round-trip
/// well within 1e-9.
pub fn report_to_csv(report: &EvalReport) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    let mut push_row = |t_iou: f64, block: &MetricBlock, category: &str| {
        out.push_str(&format!(
            "{:.12},{:.12},{},{},{},{:.12},{:.12},{:.12},{}\n",
            report.conf_threshold,
            t_iou,
            block.tp,
            block.fp,
            block.fn_count,
            block.precision,
            block.recall,
            block.f1,
            category
        ));
    };
    for tm in &report.thresholds {
        push_row(tm.t_iou, &tm.overall, "all");
        for (cat, block) in &tm.per_category {
            push_row(tm.t_iou, block, cat);
        }
    }
    out
}

pub fn report_from_csv(text: &str) -> Result<EvalReport> {
    use crate::eval::ThresholdMetrics;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == REPORT_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse { line: 1, message: format!("bad header {header:?}") })
        }
        None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    }
    let mut conf_threshold = None;
    let mut thresholds: Vec<ThresholdMetrics> = Vec::new();
    for (line_no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                line: line_no + 1,
                message: format!("expected 9 columns, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("bad float {s:?}"),
            })
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("bad count {s:?}"),
            })
        };
        let threshold = parse_f(fields[0])?;
        conf_threshold.get_or_insert(threshold);
        let t_iou = parse_f(fields[1])?;
        let block = MetricBlock {
            tp: parse_u(fields[2])?,
            fp: parse_u(fields[3])?,
            fn_count: parse_u(fields[4])?,
            precision: parse_f(fields[5])?,
            recall: parse_f(fields[6])?,
            f1: parse_f(fields[7])?,
        };
        let category = fields[8];
        let slot = match thresholds.iter_mut().find(|t| (t.t_iou - t_iou).abs() < 1e-12) {
            Some(slot) => slot,
            None => {
                thresholds.push(ThresholdMetrics {
                    t_iou,
                    overall: MetricBlock { tp: 0, fp: 0, fn_count: 0, precision: 0.0, recall: 0.0, f1: 0.0 },
                    per_category: BTreeMap::new(),
                });
                thresholds.last_mut().unwrap()
            }
        };
        if category == "all" {
            slot.overall = block;
        } else {
            slot.per_category.insert(category.to_string(), block);
        }
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        conf_threshold: conf_threshold
            .ok_or(Error::Parse { line: 2, message: "no data rows".into() })?,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_parse_basics() {
        let parsed = parse_lines_file("100 590 105 580 110 570\n", 1640.0, 590.0).unwrap();
        assert_eq!(parsed.lanes.len(), 1);
        assert_eq!(parsed.lanes[0].points().len(), 3);
        assert_eq!(parsed.dropped, 0);

        assert!(parse_lines_file("", 1640.0, 590.0).unwrap().lanes.is_empty());

        // Negative-x sentinel points are dropped.
        let parsed = parse_lines_file("-2 590 100 580 105 570\n", 1640.0, 590.0).unwrap();
        assert_eq!(parsed.lanes[0].points().len(), 2);

        // A line reduced below 2 points is dropped with a count.
        let parsed = parse_lines_file("-2 590 -2 580 105 570\n10 10 20 20\n", 100.0, 100.0).unwrap();
        assert_eq!(parsed.lanes.len(), 1);
        assert_eq!(parsed.dropped, 1);
    }

    #[test]
    fn lines_parse_errors_carry_line_numbers() {
        let err = parse_lines_file("1 2 3 4\n10 20 30\n", 100.0, 100.0).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected: {other}"),
        }
        let err = parse_lines_file("1 2 x 4\n", 100.0, 100.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn lines_round_trip_values() {
        let text = "100.25 590 105.5 580.125 110 570\n0.5 33 1.25 22\n";
        let parsed = parse_lines_file(text, 1640.0, 590.0).unwrap();
        let serialized = serialize_lines_file(&parsed.lanes);
        let reparsed = parse_lines_file(&serialized, 1640.0, 590.0).unwrap();
        assert_eq!(parsed.lanes, reparsed.lanes);
    }

    #[test]
    fn curvelanes_json_conversion() {
        let text = r#"{"Lines": [
            [{"x": "100.0", "y": "700.0"}, {"x": "120.5", "y": "600.0"}, {"x": "140", "y": "500"}],
            [{"x": "1.0", "y": "5.0"}, {"x": "2.0", "y": "5.0"}],
            [{"x": "9.0", "y": "9.0"}]
        ]}"#;
        let parsed = parse_curvelanes_json(text, 1280.0, 720.0).unwrap();
        // One usable lane; the duplicate-y hook and the single point drop.
        assert_eq!(parsed.lanes.len(), 1);
        assert_eq!(parsed.dropped, 2);
        assert_eq!(parsed.lanes[0].points()[0], (100.0, 700.0));

        assert!(matches!(
            parse_curvelanes_json("{\"Lines\": oops}", 100.0, 100.0),
            Err(Error::Json { .. })
        ));
        assert!(matches!(
            parse_curvelanes_json(
                r#"{"Lines": [[{"x": "a", "y": "1"}, {"x": "2", "y": "2"}]]}"#,
                100.0,
                100.0
            ),
            Err(Error::InvalidAnnotation(_))
        ));
    }

    #[test]
    fn list_parse_and_video_ids() {
        let text = "/driver_23_30frame/05151649_0422.MP4/00000.jpg extra cols\n\
                    driver_23_30frame/05151649_0422.MP4/00030.jpg\n";
        let stubs = parse_list_file(text).unwrap();
        assert_eq!(stubs.len(), 2);
        assert_eq!(stubs[0].path, "driver_23_30frame/05151649_0422.MP4/00000.jpg");
        assert_eq!(stubs[0].video, "driver_23_30frame/05151649_0422.MP4");
        assert_eq!(stubs[0].video, stubs[1].video);

        let dup = "a/b.jpg\na/b.jpg\n";
        assert!(matches!(parse_list_file(dup), Err(Error::DuplicatePath(_))));
    }

    fn stub(video: &str, frame: usize) -> FrameStub {
        FrameStub { path: format!("{video}/{frame:05}.jpg"), video: video.to_string() }
    }

    #[test]
    fn filter_redundant_rules() {
        // All-identical frames: only the first kept.
        let stubs: Vec<FrameStub> = (0..5).map(|k| stub("v", k)).collect();
        let means: BTreeMap<String, f64> =
            stubs.iter().map(|s| (s.path.clone(), 100.0)).collect();
        let kept = filter_redundant(&stubs, &means, 15.0).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0], stubs[0]);

        // Threshold 0 keeps everything (diff 0 is not < 0).
        let kept = filter_redundant(&stubs, &means, 0.0).unwrap();
        assert_eq!(kept.len(), 5);

        // Alternating diffs of 20 at threshold 15: all kept.
        let means: BTreeMap<String, f64> = stubs
            .iter()
            .enumerate()
            .map(|(k, s)| (s.path.clone(), if k % 2 == 0 { 100.0 } else { 120.0 }))
            .collect();
        let kept = filter_redundant(&stubs, &means, 15.0).unwrap();
        assert_eq!(kept.len(), 5);

        // Diffs against the original predecessor, not the surviving one.
        let stubs: Vec<FrameStub> = (0..3).map(|k| stub("w", k)).collect();
        let means: BTreeMap<String, f64> = vec![
            (stubs[0].path.clone(), 100.0),
            (stubs[1].path.clone(), 110.0), // dropped: |110 - 100| < 15
            (stubs[2].path.clone(), 124.0), // dropped: |124 - 110| < 15 against the ORIGINAL predecessor
        ]
        .into_iter()
        .collect();
        let kept = filter_redundant(&stubs, &means, 15.0).unwrap();
        assert_eq!(kept.len(), 1);

        // Missing stats error lists the paths.
        let empty = BTreeMap::new();
        match filter_redundant(&stubs, &empty, 15.0) {
            Err(Error::MissingPixelStats(paths)) => assert_eq!(paths.len(), 3),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn sidecar_parse() {
        let text = "path,mean\na/0.jpg,100.5\na/1.jpg,99.25\n";
        let means = parse_mean_sidecar(text).unwrap();
        assert_eq!(means["a/0.jpg"], 100.5);
        assert_eq!(means.len(), 2);
        assert!(parse_mean_sidecar("nocomma\n").is_err());
    }

    #[test]
    fn dump_round_trip_and_schema() {
        let mut dump = PredictionDump::new();
        dump.frames.insert(
            "a/0.jpg".into(),
            vec![PredictionEntry {
                points: vec![(100.123456789, 590.0), (105.0, 580.0)],
                image_width: 1640.0,
                image_height: 590.0,
                confidence: 0.873,
            }],
        );
        let json = dump.to_json();
        let back = PredictionDump::from_json(&json).unwrap();
        assert_eq!(dump, back);

        let bad_version = json.replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(
            PredictionDump::from_json(&bad_version),
            Err(Error::SchemaVersion { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn malformed_json_reports_offset() {
        let text = "{\n  \"schema_version\": 1,\n  \"frames\": oops\n}";
        match PredictionDump::from_json(text) {
            Err(Error::Json { line, offset, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(&text[offset..offset + 1], "o");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn report_csv_round_trip_and_columns() {
        use crate::eval::{Counts, MetricBlock, ThresholdMetrics};
        let report = EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            conf_threshold: 0.39,
            thresholds: vec![ThresholdMetrics {
                t_iou: 0.5,
                overall: MetricBlock::from_counts(Counts { tp: 7, fp: 2, fn_count: 3 }),
                per_category: vec![(
                    "normal".to_string(),
                    MetricBlock::from_counts(Counts { tp: 7, fp: 2, fn_count: 3 }),
                )]
                .into_iter()
                .collect(),
            }],
        };
        let csv = report_to_csv(&report);
        assert!(csv.starts_with(REPORT_CSV_HEADER));
        let back = report_from_csv(&csv).unwrap();
        assert_eq!(back.conf_threshold, report.conf_threshold);
        let a = &report.thresholds[0].overall;
        let b = &back.thresholds[0].overall;
        assert_eq!((a.tp, a.fp, a.fn_count), (b.tp, b.fp, b.fn_count));
        assert!((a.f1 - b.f1).abs() < 1e-9);

        let json = report_to_json(&report);
        let back = report_from_json(&json).unwrap();
        assert_eq!(back, report);
    }
}
