//! Command-line front end for calibkit.
//!
//! Exit codes: 0 success, 2 bad input or flags, 3 solver failure,
//! 4 segmentation failure, 5 frame mismatch.

pub mod commands;
pub mod error;
pub mod format;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

use calibkit::handeye::PairStrategy;
use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::SimKind;
pub use crate::error::{CliError, ExitKind};

#[derive(Debug, Parser)]
#[command(name = "calibkit", version, about = "Extrinsic calibration of a robot camera and a 2D LIDAR")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyArg {
    All,
    Consecutive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Handeye,
    Lidarcam,
    Chain,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve AX = XB for the camera mounting from a hand-eye dataset.
    Handeye {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        strategy: StrategyArg,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Solve the LIDAR-camera transform from plane correspondences.
    Lidar {
        #[arg(long, required_unless_present = "watch", conflicts_with = "watch")]
        data: Option<PathBuf>,
        #[arg(long, required_unless_present = "watch")]
        out: Option<PathBuf>,
        /// Plate chord length in meters used to pick the plate segment.
        #[arg(long)]
        expected_length: Option<f64>,
        /// Segment the raw scans instead of using stored plate points.
        #[arg(long)]
        from_scans: bool,
        /// Write reprojected scan points as CSV.
        #[arg(long, requires = "intrinsics", conflicts_with = "watch")]
        overlay: Option<PathBuf>,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
        /// Consume dataset files from a directory as they appear.
        #[arg(long)]
        watch: Option<PathBuf>,
        /// With --watch: process the files present and exit.
        #[arg(long, requires = "watch")]
        once: bool,
        #[arg(long, requires = "watch")]
        max_files: Option<usize>,
        #[arg(long, requires = "watch", default_value_t = 500)]
        poll_ms: u64,
    },
    /// Compose Y = C_f · X · B_f.
    Chain {
        #[arg(long)]
        handeye: PathBuf,
        #[arg(long)]
        lidar: PathBuf,
        #[arg(long)]
        fixed_pose: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset and its ground truth.
    Simulate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        seed: u64,
        /// Sigmas "rot,trans,range" in radians, meters, meters.
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        noise: String,
        /// Surround the plates with walls and store full scans.
        #[arg(long)]
        clutter: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare calibration results against ground truth.
    Evaluate {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Handeye {
            poses,
            out,
            strategy,
            max_iters,
        } => commands::handeye(&commands::HandEyeArgs {
            poses,
            out,
            strategy: match strategy {
                StrategyArg::All => PairStrategy::All,
                StrategyArg::Consecutive => PairStrategy::Consecutive,
            },
            max_iters: *max_iters,
        }),
        Command::Lidar {
            data,
            out,
            expected_length,
            from_scans,
            overlay,
            intrinsics,
            watch,
            once,
            max_files,
            poll_ms,
        } => match (watch, data, out) {
            (Some(dir), _, _) => commands::watch(&commands::WatchArgs {
                dir,
                out: out.as_deref(),
                expected_length: *expected_length,
                from_scans: *from_scans,
                once: *once,
                max_files: *max_files,
                poll: Duration::from_millis(*poll_ms),
            }),
            (None, Some(data), Some(out)) => commands::lidar(&commands::LidarArgs {
                data,
                out,
                expected_length: *expected_length,
                from_scans: *from_scans,
                overlay: overlay.as_deref(),
                intrinsics: intrinsics.as_deref(),
            }),
            _ => Err(CliError::input("lidar needs --data and --out, or --watch")),
        },
        Command::Chain {
            handeye,
            lidar,
            fixed_pose,
            out,
        } => commands::chain(handeye, lidar, fixed_pose, out),
        Command::Simulate {
            kind,
            seed,
            noise,
            clutter,
            out,
        } => {
            let kind = match kind {
                KindArg::Handeye => SimKind::Handeye,
                KindArg::Lidarcam => SimKind::Lidarcam,
                KindArg::Chain => SimKind::Chain,
            };
            commands::simulate(kind, *seed, commands::parse_noise(noise)?, *clutter, out)
        }
        Command::Evaluate { result, truth, json } => commands::evaluate(result, truth, *json),
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Input as i32 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
