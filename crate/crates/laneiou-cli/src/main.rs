//! `laneiou` command-line harness.
//!
//! Exit codes: 0 success, 2 input error, 3 internal invariant violation.
//! Failures additionally emit one machine-readable JSON line on stderr.

mod commands;
mod opts;

use clap::{Parser, Subcommand};

use opts::{resolve, FileConfig};

#[derive(Parser, Debug)]
#[command(
    name = "laneiou",
    version,
    about = "Lane detection metrics: tilt-aware LaneIoU similarity, mask-based F1 evaluation, \
             dynamic sample assignment and synthetic analysis harnesses",
    after_help = "Defaults follow the CULane benchmark conventions: 30 px metric masks at \
                  1640x590, IoU thresholds 0.5/0.75, assignment widths 15/800 (dynamic-k) and \
                  60/800 (cost) on the 800x320 training frame, frame-filter threshold 15. \
                  A --config TOML file overrides flags; flags override defaults."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a prediction dump against CULane-format annotations.
    Evaluate(commands::EvaluateArgs),
    /// Select the confidence threshold by k-fold cross-validation over videos.
    CrossvalThreshold(commands::CrossvalArgs),
    /// Drop redundant (stationary-scene) frames from a split list.
    FilterFrames(commands::FilterArgs),
    /// Similarity-vs-metric-IoU correlation study on synthetic lane pairs.
    Correlate(commands::CorrelateArgs),
    /// Angle-binned assignment statistics on an isotropic synthetic anchor set.
    AssignStats(commands::AssignStatsArgs),
    /// Replace one prediction component (confidence, anchor or length) with
    /// ground-truth-derived values and compare F1 against the raw run.
    Oracle(commands::OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad files, flags or data; exit 2.
    Input,
    /// A library invariant failed on validated data; exit 3.
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: String) -> Self {
        Self { kind: ErrorKind::Input, message }
    }

    pub fn internal(message: String) -> Self {
        Self { kind: ErrorKind::Internal, message }
    }

    fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Internal => 3,
        }
    }

    fn to_json(&self) -> String {
        let kind = match self.kind {
            ErrorKind::Input => "input",
            ErrorKind::Internal => "internal",
        };
        serde_json::json!({ "error": { "kind": kind, "message": self.message } }).to_string()
    }
}

impl From<laneiou::Error> for CliError {
    fn from(err: laneiou::Error) -> Self {
        use laneiou::Error as E;
        let kind = match err {
            E::Io(_)
            | E::Parse { .. }
            | E::Json { .. }
            | E::SchemaVersion { .. }
            | E::DuplicatePath(_)
            | E::MissingPixelStats(_)
            | E::FrameKeyMismatch(_)
            | E::InvalidAnnotation(_)
            | E::NotEnoughVideos { .. }
            | E::InvalidConfig(_)
            | E::EmptyInput(_) => ErrorKind::Input,
            E::DegenerateLane { .. }
            | E::InvalidAnchor(_)
            | E::UndefinedIoU
            | E::ResolutionMismatch { .. }
            | E::EmptyMasks => ErrorKind::Internal,
        };
        Self { kind, message: err.to_string() }
    }
}

fn configure_threads(jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::internal(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    macro_rules! dispatch {
        ($args:expr, $f:path) => {{
            let file = FileConfig::load($args.common.config.as_deref())?;
            configure_threads(resolve(file.jobs, $args.common.jobs, 0))?;
            $f($args, &file)
        }};
    }
    match &cli.command {
        Command::Evaluate(args) => dispatch!(args, commands::cmd_evaluate),
        Command::CrossvalThreshold(args) => dispatch!(args, commands::cmd_crossval),
        Command::FilterFrames(args) => dispatch!(args, commands::cmd_filter_frames),
        Command::Correlate(args) => dispatch!(args, commands::cmd_correlate),
        Command::AssignStats(args) => dispatch!(args, commands::cmd_assign_stats),
        Command::Oracle(args) => dispatch!(args, commands::cmd_oracle),
    }
}

fn main() {
    // Die quietly on a closed pipe (e.g. `laneiou ... | head`) instead of
    // panicking in println.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind as ClapKind;
            if matches!(err.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) {
                print!("{err}");
                std::process::exit(0);
            }
            eprintln!("{err}");
            let wrapped = CliError::input(err.to_string());
            eprintln!("{}", wrapped.to_json());
            std::process::exit(2);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code());
    }
}
