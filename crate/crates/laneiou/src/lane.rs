//! Row-anchored lane representation and geometry.
//!
//! A lane is one x-coordinate per fixed image row, valid over a single
//! contiguous run of rows. Coordinates are stored normalized to [0, 1] by the
//! source image width and height. Tilt-dependent math (virtual widths, anchor
//! angles) runs in the pixel frame of the reference resolution carried by
//! [`RowGrid`], since the same normalized offset means a different physical
//! angle at a different aspect ratio.

use crate::error::{Error, Result};

/// Sentinel stored in `xs` at rows where the lane does not exist. Never read.
pub const INVALID_X: f64 = -2.0;

/// Fixed row grid: `n_rows` rows spread over a reference resolution.
///
/// Row `i` sits at pixel `y = ref_height * i / (n_rows - 1)`; row 0 is the
/// image top, row `n_rows - 1` the bottom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowGrid {
    n_rows: usize,
    ref_width: f64,
    ref_height: f64,
}

impl RowGrid {
    pub fn new(n_rows: usize, ref_width: f64, ref_height: f64) -> Result<Self> {
        if n_rows < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 2 rows, got {n_rows}"
            )));
        }
        if !(ref_width > 0.0 && ref_width.is_finite())
            || !(ref_height > 0.0 && ref_height.is_finite())
        {
            return Err(Error::InvalidConfig(
                "reference resolution must be positive and finite".into(),
            ));
        }
        Ok(Self { n_rows, ref_width, ref_height })
    }

    /// 72 rows over the 800x320 CULane training frame.
    pub fn culane_train() -> Self {
        Self { n_rows: 72, ref_width: 800.0, ref_height: 320.0 }
    }

    /// 72 rows over the 1640x590 CULane metric frame.
    pub fn culane_metric() -> Self {
        Self { n_rows: 72, ref_width: 1640.0, ref_height: 590.0 }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn ref_width(&self) -> f64 {
        self.ref_width
    }

    pub fn ref_height(&self) -> f64 {
        self.ref_height
    }

    /// y of row `i` in [0, 1] image-height units.
    #[inline]
    pub fn row_y_norm(&self, i: usize) -> f64 {
        i as f64 / (self.n_rows - 1) as f64
    }

    /// y of row `i` in reference pixels.
    #[inline]
    pub fn row_y_px(&self, i: usize) -> f64 {
        self.ref_height * i as f64 / (self.n_rows - 1) as f64
    }

    /// Vertical distance between adjacent rows in reference pixels.
    pub fn row_step_px(&self) -> f64 {
        self.ref_height / (self.n_rows - 1) as f64
    }
}

/// A lane on a [`RowGrid`]: per-row normalized x, a contiguous validity run
/// and a confidence score.
///
/// Valid x values are usually inside [0, 1]; values outside are permitted
/// (anchors may point out of frame) and are clipped by the consumers that
/// need in-frame geometry (resampling clips at ingestion, the rasterizer
/// clips strokes, IoU clips edges when configured).
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    xs: Vec<f64>,
    valid: Vec<bool>,
    confidence: f64,
}

impl Lane {
    pub fn new(xs: Vec<f64>, valid: Vec<bool>, confidence: f64) -> Result<Self> {
        if xs.len() != valid.len() {
            return Err(Error::InvalidConfig(format!(
                "xs length {} != valid length {}",
                xs.len(),
                valid.len()
            )));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidConfig(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        // The validity run must be contiguous: one start row, one end row.
        let mut runs = 0usize;
        let mut prev = false;
        for &v in &valid {
            if v && !prev {
                runs += 1;
            }
            prev = v;
        }
        if runs > 1 {
            return Err(Error::InvalidConfig(
                "lane validity mask has more than one contiguous run".into(),
            ));
        }
        let mut xs = xs;
        for (x, &v) in xs.iter_mut().zip(&valid) {
            if v {
                if !x.is_finite() {
                    return Err(Error::InvalidConfig("non-finite x on a valid row".into()));
                }
            } else {
                *x = INVALID_X;
            }
        }
        Ok(Self { xs, valid, confidence })
    }

    /// Lane valid on `start..start + run.len()` with the given x values.
    pub fn from_rows(n_rows: usize, start: usize, run: &[f64], confidence: f64) -> Result<Self> {
        if start + run.len() > n_rows {
            return Err(Error::InvalidConfig(format!(
                "run {}..{} exceeds {n_rows} rows",
                start,
                start + run.len()
            )));
        }
        let mut xs = vec![INVALID_X; n_rows];
        let mut valid = vec![false; n_rows];
        for (k, &x) in run.iter().enumerate() {
            xs[start + k] = x;
            valid[start + k] = true;
        }
        Self::new(xs, valid, confidence)
    }

    pub fn n_rows(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, row: usize) -> bool {
        self.valid[row]
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn set_confidence(&mut self, confidence: f64) {
        self.confidence = confidence.clamp(0.0, 1.0);
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.set_confidence(confidence);
        self
    }

    /// First and last valid row, if any row is valid.
    pub fn valid_run(&self) -> Option<(usize, usize)> {
        let first = self.valid.iter().position(|&v| v)?;
        let last = self.valid.iter().rposition(|&v| v)?;
        Some((first, last))
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Same lane translated horizontally by `dx` normalized units.
    pub fn shifted(&self, dx: f64) -> Self {
        let mut out = self.clone();
        for (x, &v) in out.xs.iter_mut().zip(&self.valid) {
            if v {
                *x += dx;
            }
        }
        out
    }
}

/// Raw annotation polyline in source pixel coordinates, canonically ordered
/// bottom-to-top (strictly decreasing y).
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<(f64, f64)>,
    image_width: f64,
    image_height: f64,
}

impl Polyline {
    /// Validates and canonicalizes the point order. Rejects polylines that are
    /// not single-valued in y (e.g. near-horizontal hooks), which cannot be
    /// expressed in the row-based form.
    pub fn new(points: Vec<(f64, f64)>, image_width: f64, image_height: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidAnnotation(format!(
                "polyline has {} point(s), need at least 2",
                points.len()
            )));
        }
        if !(image_width > 0.0) || !(image_height > 0.0) {
            return Err(Error::InvalidAnnotation("non-positive image resolution".into()));
        }
        if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidAnnotation("non-finite point coordinate".into()));
        }
        let mut points = points;
        if points.first().unwrap().1 < points.last().unwrap().1 {
            points.reverse();
        }
        if points.windows(2).any(|w| w[1].1 >= w[0].1) {
            return Err(Error::InvalidAnnotation(
                "y not strictly monotone after bottom-to-top ordering".into(),
            ));
        }
        Ok(Self { points, image_width, image_height })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn image_width(&self) -> f64 {
        self.image_width
    }

    pub fn image_height(&self) -> f64 {
        self.image_height
    }
}

/// Straight-anchor parameters: a ray from `(x_a, y_a)` at `theta_a` degrees
/// (90 = vertical, measured so angles below 90 lean right going up), truncated
/// to `length`, plus per-row horizontal residual offsets `dx`.
///
/// `x_a`, `y_a` and `dx` are in normalized image units; `length` is in
/// image-height units so a full-height vertical ray has length 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorParams {
    pub x_a: f64,
    pub y_a: f64,
    pub theta_a: f64,
    pub length: f64,
    pub dx: Vec<f64>,
}

/// Resamples an annotation polyline onto the grid rows.
///
/// Each grid row inside the polyline's y-span gets the linearly interpolated
/// x, normalized by the source image width and clipped to [0, 1]; rows
/// outside the span are invalid. Gaps between far-apart points are bridged by
/// the interpolation, so the run is contiguous by construction.
pub fn resample_to_grid(poly: &Polyline, grid: &RowGrid) -> Result<Lane> {
    let pts = poly.points();
    let y_bottom = pts[0].1;
    let y_top = pts[pts.len() - 1].1;
    let eps = 1e-9 * poly.image_height();

    let n = grid.n_rows();
    let mut xs = vec![INVALID_X; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let y = grid.row_y_norm(i) * poly.image_height();
        if y < y_top - eps || y > y_bottom + eps {
            continue;
        }
        // Points are strictly decreasing in y; find the containing segment.
        let mut x = None;
        for w in pts.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if y <= y0 + eps && y >= y1 - eps {
                let t = if y0 == y1 { 0.0 } else { (y - y0) / (y1 - y0) };
                x = Some(x0 + t * (x1 - x0));
                break;
            }
        }
        if let Some(x) = x {
            xs[i] = (x / poly.image_width()).clamp(0.0, 1.0);
            valid[i] = true;
        }
    }
    Lane::new(xs, valid, 1.0)
}

/// Converts a lane back to a polyline at the grid rows, in reference pixels.
pub fn lane_to_polyline(lane: &Lane, grid: &RowGrid) -> Result<Polyline> {
    let (first, last) = lane.valid_run().ok_or(Error::DegenerateLane { valid_rows: 0 })?;
    if last == first {
        return Err(Error::DegenerateLane { valid_rows: 1 });
    }
    let mut points = Vec::with_capacity(last - first + 1);
    for i in (first..=last).rev() {
        points.push((
            lane.xs()[i] * grid.ref_width(),
            grid.row_y_norm(i) * grid.ref_height(),
        ));
    }
    Polyline::new(points, grid.ref_width(), grid.ref_height())
}

/// Per-row virtual half-widths compensating the local lane tilt.
///
/// At each valid row `w_i = (w_lane / 2) * sqrt(dx^2 + dy^2) / dy`, with dx
/// and dy in reference pixels; interior rows use central differences and the
/// run endpoints one-sided differences. The result is in normalized width
/// units, is `w_lane / 2` exactly where the lane is locally vertical and
/// grows with tilt. Invalid rows hold 0 and must not be read.
pub fn local_widths(lane: &Lane, grid: &RowGrid, w_lane: f64) -> Result<Vec<f64>> {
    let (first, last) = lane.valid_run().ok_or(Error::DegenerateLane { valid_rows: 0 })?;
    if last == first {
        return Err(Error::DegenerateLane { valid_rows: 1 });
    }
    let xs = lane.xs();
    let mut widths = vec![0.0; lane.n_rows()];
    for i in first..=last {
        let il = if i > first { i - 1 } else { i };
        let ir = if i < last { i + 1 } else { i };
        let dx = (xs[ir] - xs[il]) * grid.ref_width();
        let dy = grid.row_y_px(ir) - grid.row_y_px(il);
        widths[i] = if dx == 0.0 {
            0.5 * w_lane
        } else {
            0.5 * w_lane * (dx * dx + dy * dy).sqrt() / dy
        };
    }
    Ok(widths)
}

/// Renders anchor parameters to a lane: the straight ray sampled at the grid
/// rows it spans, plus the per-row residuals. `dx` may be empty (treated as
/// all-zero) or one value per grid row.
pub fn render_anchor(params: &AnchorParams, grid: &RowGrid) -> Result<Lane> {
    if !(params.theta_a > 0.0 && params.theta_a < 180.0) {
        return Err(Error::InvalidAnchor(format!(
            "theta_a {} outside (0, 180)",
            params.theta_a
        )));
    }
    if !(params.length > 0.0) {
        return Err(Error::InvalidAnchor(format!(
            "length {} must be positive",
            params.length
        )));
    }
    if !params.dx.is_empty() && params.dx.len() != grid.n_rows() {
        return Err(Error::InvalidAnchor(format!(
            "dx has {} entries for a {}-row grid",
            params.dx.len(),
            grid.n_rows()
        )));
    }

    let w = grid.ref_width();
    let h = grid.ref_height();
    let theta = params.theta_a.to_radians();
    let (sin_t, cos_t) = (theta.sin(), theta.cos());
    let cot = cos_t / sin_t;

    let x_a_px = params.x_a * w;
    let y_a_px = params.y_a * h;
    let y_top_px = y_a_px - params.length * h * sin_t;
    let eps = 1e-9 * h;

    let n = grid.n_rows();
    let mut xs = vec![INVALID_X; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let y = grid.row_y_px(i);
        if y > y_a_px + eps || y < y_top_px - eps {
            continue;
        }
        let ray_x = x_a_px + (y_a_px - y) * cot;
        let residual = if params.dx.is_empty() { 0.0 } else { params.dx[i] };
        xs[i] = ray_x / w + residual;
        valid[i] = true;
    }
    Lane::new(xs, valid, 1.0)
}

/// Fits straight-anchor parameters to a lane.
///
/// The angle comes from a least-squares line over the valid rows (in
/// reference pixels), the start point is the bottom-most valid lane point,
/// the length spans the valid run along the ray, and `dx` stores the per-row
/// residuals so that `render_anchor(fit_anchor(lane))` reproduces the lane
/// exactly on its valid rows.
pub fn fit_anchor(lane: &Lane, grid: &RowGrid) -> Result<AnchorParams> {
    let (first, last) = lane.valid_run().ok_or(Error::DegenerateLane { valid_rows: 0 })?;
    if last == first {
        return Err(Error::DegenerateLane { valid_rows: 1 });
    }
    let xs = lane.xs();
    let w = grid.ref_width();
    let h = grid.ref_height();

    let n = (last - first + 1) as f64;
    let mut mean_x = 0.0;
    let mut mean_y = 0.0;
    for i in first..=last {
        mean_x += xs[i] * w;
        mean_y += grid.row_y_px(i);
    }
    mean_x /= n;
    mean_y /= n;
    let mut cov = 0.0;
    let mut var_y = 0.0;
    for i in first..=last {
        let dy = grid.row_y_px(i) - mean_y;
        cov += dy * (xs[i] * w - mean_x);
        var_y += dy * dy;
    }
    // var_y > 0 always: at least two distinct rows.
    let slope = cov / var_y; // dx per dy (y down-positive)
    let theta_a = f64::atan2(1.0, -slope).to_degrees();

    let theta = theta_a.to_radians();
    let (sin_t, cos_t) = (theta.sin(), theta.cos());
    let cot = cos_t / sin_t;

    let x_a_px = xs[last] * w;
    let y_a_px = grid.row_y_px(last);
    let y_top_px = grid.row_y_px(first);
    let length = (y_a_px - y_top_px) / (sin_t * h);

    let mut dx = vec![0.0; lane.n_rows()];
    for i in first..=last {
        let ray_x = x_a_px + (y_a_px - grid.row_y_px(i)) * cot;
        dx[i] = xs[i] - ray_x / w;
    }

    Ok(AnchorParams {
        x_a: x_a_px / w,
        y_a: grid.row_y_norm(last),
        theta_a,
        length,
        dx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_100() -> RowGrid {
        RowGrid::new(5, 100.0, 100.0).unwrap()
    }

    #[test]
    fn grid_rows_increase_in_y() {
        let g = RowGrid::new(72, 800.0, 320.0).unwrap();
        for i in 1..g.n_rows() {
            assert!(g.row_y_px(i) > g.row_y_px(i - 1));
        }
        assert_eq!(g.row_y_px(0), 0.0);
        assert!((g.row_y_px(71) - 320.0).abs() < 1e-12);
        assert!(RowGrid::new(1, 10.0, 10.0).is_err());
        assert!(RowGrid::new(4, -1.0, 10.0).is_err());
    }

    #[test]
    fn lane_rejects_split_runs() {
        let xs = vec![0.5; 5];
        let valid = vec![true, false, true, true, false];
        assert!(Lane::new(xs, valid, 1.0).is_err());
        let ok = Lane::from_rows(5, 1, &[0.1, 0.2, 0.3], 0.5).unwrap();
        assert_eq!(ok.valid_run(), Some((1, 3)));
        assert_eq!(ok.xs()[0], INVALID_X);
    }

    #[test]
    fn resample_vertical_full_span() {
        let grid = RowGrid::new(10, 200.0, 100.0).unwrap();
        let poly = Polyline::new(vec![(100.0, 100.0), (100.0, 0.0)], 200.0, 100.0).unwrap();
        let lane = resample_to_grid(&poly, &grid).unwrap();
        assert_eq!(lane.n_valid(), 10);
        for i in 0..10 {
            assert!((lane.xs()[i] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_partial_span_rows() {
        let n = 40;
        let grid = RowGrid::new(n, 800.0, 320.0).unwrap();
        // Segment covering exactly rows 10..=20 in a source image matching
        // the reference height.
        let y10 = grid.row_y_norm(10) * 320.0;
        let y20 = grid.row_y_norm(20) * 320.0;
        let poly = Polyline::new(vec![(400.0, y20), (390.0, y10)], 800.0, 320.0).unwrap();
        let lane = resample_to_grid(&poly, &grid).unwrap();
        for i in 0..n {
            assert_eq!(lane.is_valid(i), (10..=20).contains(&i), "row {i}");
        }
    }

    #[test]
    fn resample_matches_bruteforce_interpolation() {
        // 45-degree segment across a 100x100 image on a 5-row grid.
        let grid = grid_100();
        let pts = vec![(100.0, 100.0), (0.0, 0.0)];
        let poly = Polyline::new(pts.clone(), 100.0, 100.0).unwrap();
        let lane = resample_to_grid(&poly, &grid).unwrap();
        for i in 0..5 {
            let y = 100.0 * i as f64 / 4.0;
            // Independent point-in-segment interpolation.
            let (x0, y0) = pts[0];
            let (x1, y1) = pts[1];
            let t = (y - y0) / (y1 - y0);
            let expected = (x0 + t * (x1 - x0)) / 100.0;
            assert!((lane.xs()[i] - expected).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn resample_is_idempotent() {
        let grid = RowGrid::new(20, 800.0, 320.0).unwrap();
        let run: Vec<f64> = (0..15).map(|k| 0.3 + 0.01 * k as f64 + 0.002 * (k * k) as f64).collect();
        let lane = Lane::from_rows(20, 3, &run, 1.0).unwrap();
        let poly = lane_to_polyline(&lane, &grid).unwrap();
        let again = resample_to_grid(&poly, &grid).unwrap();
        assert_eq!(lane.valid(), again.valid());
        for i in 3..18 {
            assert!((lane.xs()[i] - again.xs()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn polyline_rejects_bad_input() {
        assert!(Polyline::new(vec![(0.0, 0.0)], 10.0, 10.0).is_err());
        // Duplicate y after ordering.
        assert!(Polyline::new(vec![(0.0, 5.0), (1.0, 5.0), (2.0, 0.0)], 10.0, 10.0).is_err());
        // U-shaped (not single-valued in y).
        assert!(
            Polyline::new(vec![(0.0, 9.0), (1.0, 2.0), (2.0, 9.5)], 10.0, 10.0).is_err()
        );
        // Top-to-bottom input is reversed, not rejected.
        let p = Polyline::new(vec![(0.0, 0.0), (1.0, 5.0)], 10.0, 10.0).unwrap();
        assert_eq!(p.points()[0].1, 5.0);
    }

    #[test]
    fn widths_vertical_lane() {
        let grid = RowGrid::new(8, 800.0, 320.0).unwrap();
        let lane = Lane::from_rows(8, 1, &[0.4; 6], 1.0).unwrap();
        let w = local_widths(&lane, &grid, 30.0 / 800.0).unwrap();
        for i in 1..7 {
            assert_eq!(w[i], 15.0 / 800.0, "row {i}");
        }
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn widths_45_degree_lane() {
        // One row step equals one pixel column step.
        let n = 11;
        let grid = RowGrid::new(n, 100.0, 100.0).unwrap();
        let step = grid.row_step_px() / 100.0;
        let run: Vec<f64> = (0..n).map(|k| 0.1 + step * k as f64).collect();
        let lane = Lane::from_rows(n, 0, &run, 1.0).unwrap();
        let w_lane = 0.06;
        let w = local_widths(&lane, &grid, w_lane).unwrap();
        for i in 0..n {
            assert!(
                (w[i] - 0.5 * w_lane * 2.0f64.sqrt()).abs() < 1e-12,
                "row {i}: {}",
                w[i]
            );
        }
    }

    #[test]
    fn widths_match_per_row_recomputation_on_curve() {
        let n = 30;
        let grid = RowGrid::new(n, 800.0, 320.0).unwrap();
        let run: Vec<f64> = (0..n)
            .map(|k| 0.5 + 0.004 * k as f64 - 0.0006 * (k as f64 - 15.0).powi(2) / 15.0)
            .collect();
        let lane = Lane::from_rows(n, 0, &run, 1.0).unwrap();
        let w_lane = 15.0 / 800.0;
        let w = local_widths(&lane, &grid, w_lane).unwrap();
        let xs = lane.xs();
        for i in 1..n - 1 {
            let dx = (xs[i + 1] - xs[i - 1]) * 800.0;
            let dy = grid.row_y_px(i + 1) - grid.row_y_px(i - 1);
            let expected = 0.5 * w_lane * dx.hypot(dy) / dy;
            assert!((w[i] - expected).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn widths_floor_at_half_w_lane() {
        let n = 25;
        let grid = RowGrid::new(n, 800.0, 320.0).unwrap();
        let run: Vec<f64> = (0..20).map(|k| 0.2 + 0.01 * k as f64).collect();
        let lane = Lane::from_rows(n, 2, &run, 1.0).unwrap();
        let w_lane = 0.02;
        let w = local_widths(&lane, &grid, w_lane).unwrap();
        for i in 2..22 {
            assert!(w[i] >= 0.5 * w_lane - 1e-15);
        }
    }

    #[test]
    fn widths_invariant_under_point_reversal() {
        let grid = RowGrid::new(12, 800.0, 320.0).unwrap();
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|k| (300.0 + 12.0 * k as f64, 320.0 - 30.0 * k as f64))
            .collect();
        let forward = Polyline::new(pts.clone(), 800.0, 320.0).unwrap();
        let reversed =
            Polyline::new(pts.into_iter().rev().collect(), 800.0, 320.0).unwrap();
        let a = local_widths(&resample_to_grid(&forward, &grid).unwrap(), &grid, 0.02).unwrap();
        let b = local_widths(&resample_to_grid(&reversed, &grid).unwrap(), &grid, 0.02).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn widths_require_two_valid_rows() {
        let grid = grid_100();
        let lane = Lane::from_rows(5, 2, &[0.5], 1.0).unwrap();
        assert!(matches!(
            local_widths(&lane, &grid, 0.02),
            Err(Error::DegenerateLane { valid_rows: 1 })
        ));
    }

    #[test]
    fn render_vertical_anchor() {
        let grid = RowGrid::new(10, 800.0, 320.0).unwrap();
        let params = AnchorParams { x_a: 0.4, y_a: 1.0, theta_a: 90.0, length: 1.0, dx: vec![] };
        let lane = render_anchor(&params, &grid).unwrap();
        assert_eq!(lane.n_valid(), 10);
        for i in 0..10 {
            assert!((lane.xs()[i] - 0.4).abs() < 1e-12);
        }
        // Constant residual shifts the whole lane.
        let shifted = render_anchor(
            &AnchorParams { dx: vec![0.05; 10], ..params.clone() },
            &grid,
        )
        .unwrap();
        for i in 0..10 {
            assert!((shifted.xs()[i] - 0.45).abs() < 1e-12);
        }
    }

    #[test]
    fn render_45_degrees_matches_trig() {
        let n = 9;
        let grid = RowGrid::new(n, 100.0, 100.0).unwrap();
        let params = AnchorParams { x_a: 0.2, y_a: 1.0, theta_a: 45.0, length: 0.9, dx: vec![] };
        let lane = render_anchor(&params, &grid).unwrap();
        let cot = 45.0f64.to_radians().cos() / 45.0f64.to_radians().sin();
        for i in 0..n {
            if !lane.is_valid(i) {
                continue;
            }
            let y = grid.row_y_px(i);
            let expected = (0.2 * 100.0 + (100.0 - y) * cot) / 100.0;
            assert!((lane.xs()[i] - expected).abs() < 1e-12, "row {i}");
        }
        // Truncation: length 0.9 at 45 degrees spans 0.9*sin(45) of the height.
        let span_rows = lane.n_valid() as f64;
        let expected_span = 0.9 * 45.0f64.to_radians().sin() * (n - 1) as f64 + 1.0;
        assert!((span_rows - expected_span).abs() <= 1.0);
    }

    #[test]
    fn render_rejects_degenerate() {
        let grid = grid_100();
        let base = AnchorParams { x_a: 0.5, y_a: 1.0, theta_a: 90.0, length: 0.0, dx: vec![] };
        assert!(render_anchor(&base, &grid).is_err());
        assert!(render_anchor(
            &AnchorParams { theta_a: 180.0, length: 1.0, ..base.clone() },
            &grid
        )
        .is_err());
        assert!(render_anchor(
            &AnchorParams { length: 1.0, dx: vec![0.0; 3], ..base },
            &grid
        )
        .is_err());
    }

    #[test]
    fn fit_vertical_and_tilted() {
        let grid = RowGrid::new(20, 100.0, 100.0).unwrap();
        let vertical = Lane::from_rows(20, 0, &[0.3; 20], 1.0).unwrap();
        let p = fit_anchor(&vertical, &grid).unwrap();
        assert!((p.theta_a - 90.0).abs() < 1e-9);
        assert!(p.dx.iter().all(|&d| d.abs() < 1e-12));
        assert!((p.length - 1.0).abs() < 1e-9);

        // Straight 45-degree lane: one pixel right per pixel up.
        let step = grid.row_step_px() / 100.0;
        let run: Vec<f64> = (0..20).map(|k| 0.1 + step * (19 - k) as f64).collect();
        let tilted = Lane::from_rows(20, 0, &run, 1.0).unwrap();
        let p = fit_anchor(&tilted, &grid).unwrap();
        assert!((p.theta_a - 45.0).abs() < 0.5, "theta {}", p.theta_a);
    }

    #[test]
    fn fit_render_round_trip_on_s_curve() {
        let n = 36;
        let grid = RowGrid::new(n, 800.0, 320.0).unwrap();
        let run: Vec<f64> = (0..30)
            .map(|k| 0.5 + 0.1 * (k as f64 / 29.0 * std::f64::consts::TAU).sin())
            .collect();
        let lane = Lane::from_rows(n, 4, &run, 1.0).unwrap();
        let params = fit_anchor(&lane, &grid).unwrap();
        let back = render_anchor(&params, &grid).unwrap();
        assert_eq!(lane.valid(), back.valid());
        for i in 4..34 {
            assert!(
                (lane.xs()[i] - back.xs()[i]).abs() < 1e-9,
                "row {i}: {} vs {}",
                lane.xs()[i],
                back.xs()[i]
            );
        }
    }

    #[test]
    fn rendered_straight_anchor_fits_back_to_same_angle() {
        let grid = RowGrid::new(24, 800.0, 320.0).unwrap();
        for &theta in &[30.0, 60.0, 90.0, 120.0, 155.0] {
            let params = AnchorParams {
                x_a: 0.5,
                y_a: 1.0,
                theta_a: theta,
                length: 0.8,
                dx: vec![],
            };
            let lane = render_anchor(&params, &grid).unwrap();
            let fitted = fit_anchor(&lane, &grid).unwrap();
            assert!(
                (fitted.theta_a - theta).abs() < 0.5,
                "theta {theta} -> {}",
                fitted.theta_a
            );
        }
    }
}
