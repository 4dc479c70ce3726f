use std::fmt;

use calibkit::geometry::GeometryError;
use calibkit::handeye::HandEyeError;
use calibkit::lidarcam::LidarCamError;
use calibkit::synth::SynthError;

/// Process exit status. These values are a stable contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    /// Unreadable or malformed input, bad flags.
    Input = 2,
    Solver = 3,
    Segmentation = 4,
    FrameMismatch = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Input, message)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let kind = match e {
            GeometryError::FrameMismatch { .. } => ExitKind::FrameMismatch,
            _ => ExitKind::Input,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<HandEyeError<f64>> for CliError {
    fn from(e: HandEyeError<f64>) -> Self {
        match e {
            HandEyeError::Geometry(g) => g.into(),
            HandEyeError::InvalidSample(_) => Self::input(e.to_string()),
            _ => Self::new(ExitKind::Solver, e.to_string()),
        }
    }
}

impl From<LidarCamError<f64>> for CliError {
    fn from(e: LidarCamError<f64>) -> Self {
        match e {
            LidarCamError::Geometry(g) => g.into(),
            LidarCamError::NoSegmentFound | LidarCamError::AmbiguousSegment { .. } => {
                Self::new(ExitKind::Segmentation, e.to_string())
            }
            LidarCamError::InvalidScan(_) => Self::input(e.to_string()),
            _ => Self::new(ExitKind::Solver, e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Geometry(g) => g.into(),
            _ => Self::input(e.to_string()),
        }
    }
}
