//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Annotation polyline cannot be expressed on the row grid.
    InvalidAnnotation(String),
    /// Lane has too few valid rows for the requested operation.
    DegenerateLane { valid_rows: usize },
    /// Anchor parameters describe an empty or inverted ray.
    InvalidAnchor(String),
    /// IoU is undefined for the pair (no valid support or zero union).
    UndefinedIoU,
    /// Bitmap operands have different resolutions.
    ResolutionMismatch { a: (u32, u32), b: (u32, u32) },
    /// Both masks are empty; their IoU is undefined.
    EmptyMasks,
    /// Text parse failure with 1-based line number.
    Parse { line: usize, message: String },
    /// Duplicate image path in a list file.
    DuplicatePath(String),
    /// Frames without a mean pixel value in the sidecar.
    MissingPixelStats(Vec<String>),
    /// Fewer videos than requested cross-validation folds.
    NotEnoughVideos { videos: usize, folds: usize },
    /// Configuration value out of its documented range.
    InvalidConfig(String),
    /// An input collection was empty where at least one element is required.
    EmptyInput(&'static str),
    /// JSON document failed to decode.
    Json {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
    /// File carries an unsupported schema version.
    SchemaVersion { found: u32, expected: u32 },
    /// Prediction dump keys do not match the frame list.
    FrameKeyMismatch(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidAnnotation(msg) => write!(f, "invalid annotation: {msg}"),
            Self::DegenerateLane { valid_rows } => {
                write!(f, "degenerate lane: {valid_rows} valid row(s), need at least 2")
            }
            Self::InvalidAnchor(msg) => write!(f, "invalid anchor: {msg}"),
            Self::UndefinedIoU => write!(f, "IoU undefined: no valid support or zero union"),
            Self::ResolutionMismatch { a, b } => {
                write!(f, "mask resolution mismatch: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)
            }
            Self::EmptyMasks => write!(f, "both masks empty: IoU undefined"),
            Self::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Self::DuplicatePath(path) => write!(f, "duplicate path in list file: {path}"),
            Self::MissingPixelStats(paths) => write!(
                f,
                "missing mean pixel value for {} frame(s), first: {}",
                paths.len(),
                paths.first().map(String::as_str).unwrap_or("<none>")
            ),
            Self::NotEnoughVideos { videos, folds } => {
                write!(f, "{videos} video(s) cannot be split into {folds} folds")
            }
            Self::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Self::EmptyInput(what) => write!(f, "empty input: {what}"),
            Self::Json { line, column, offset, message } => write!(
                f,
                "JSON error at line {line}, column {column} (byte offset {offset}): {message}"
            ),
            Self::SchemaVersion { found, expected } => {
                write!(f, "unsupported schema version {found}, expected {expected}")
            }
            Self::FrameKeyMismatch(key) => {
                write!(f, "prediction dump key not in frame list: {key}")
            }
            Self::Io(err) => write!(f, "I/O error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Self::Io(err)
    }
}
