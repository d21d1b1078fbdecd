//! Lane detection metrics toolkit.
//!
//! Row-anchored lanes (one x per fixed image row) are compared by LaneIoU, a
//! tilt-aware row-wise IoU whose virtual widths grow with the local lane
//! angle so that it tracks the segmentation-mask IoU used by lane detection
//! benchmarks. On top of the similarity sit:
//!
//! - [`raster`]: the mask-based metric oracle (fixed-width polyline strokes,
//!   pixel IoU),
//! - [`eval`]: the benchmark protocol (linear-sum-assignment matching, F1 at
//!   IoU thresholds, per-scene aggregation, confidence sweeps, k-fold
//!   cross-validation threshold selection),
//! - [`assign`]: dynamic top-k training-sample assignment with a focal
//!   classification cost,
//! - [`io`]: CULane-format ingestion, redundant-frame filtering and report
//!   persistence,
//! - [`synth`]: synthetic data generators and the oracle/correlation
//!   analysis harnesses.

pub mod assign;
pub mod error;
pub mod eval;
pub mod io;
pub mod iou;
pub mod lane;
pub mod mat;
pub mod matching;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{EvalConfig, EvalReport, Frame, IoUBackend};
pub use iou::{IoUConfig, IoUMatrix, IoUMode};
pub use lane::{AnchorParams, Lane, Polyline, RowGrid};
pub use raster::{LaneMask, MaskSpec};
