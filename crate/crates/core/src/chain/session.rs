use crate::lidarcam::{
    calibrate_lidar_camera, normal_spread, LidarCamError, LidarCamOptions, LidarCamResult,
    PlaneCorrespondence,
};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Red,
    Yellow,
    Green,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Red => "RED",
            Verdict::Yellow => "YELLOW",
            Verdict::Green => "GREEN",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Traffic-light thresholds and solver settings for a session.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionConfig<T: Real> {
    /// Plane RMS in meters below which the verdict may be green.
    pub green_rms: T,
    pub green_min_correspondences: usize,
    /// Normal spread in radians that green additionally requires.
    pub green_min_spread: T,
    pub yellow_rms: T,
    pub yellow_min_correspondences: usize,
    pub solver: LidarCamOptions<T>,
}

impl<T: Real> Default for SessionConfig<T> {
    fn default() -> Self {
        Self {
            green_rms: T::lit(0.01),
            green_min_correspondences: 5,
            green_min_spread: T::deg(30.0),
            yellow_rms: T::lit(0.03),
            yellow_min_correspondences: 3,
            solver: LidarCamOptions::default(),
        }
    }
}

/// Accumulated correspondences and the latest solution. Updates return a
/// new state; the correspondence list and `history` only ever grow.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionState<T: Real> {
    pub config: SessionConfig<T>,
    pub correspondences: Vec<PlaneCorrespondence<T>>,
    pub current: Option<LidarCamResult<T>>,
    /// Plane RMS of every completed re-solve, oldest first.
    pub history: Vec<T>,
    pub verdict: Verdict,
}

impl<T: Real> SessionState<T> {
    pub fn new(config: SessionConfig<T>) -> Self {
        Self {
            config,
            correspondences: Vec::new(),
            current: None,
            history: Vec::new(),
            verdict: Verdict::Red,
        }
    }

    fn grade(&self) -> Verdict {
        verdict_for(&self.config, self.current.as_ref(), &self.correspondences)
    }
}

/// Traffic-light verdict for a solution over `corrs`; no solution is red.
pub fn verdict_for<T: Real>(
    cfg: &SessionConfig<T>,
    result: Option<&LidarCamResult<T>>,
    corrs: &[PlaneCorrespondence<T>],
) -> Verdict {
    let Some(cur) = result else {
        return Verdict::Red;
    };
    let n = corrs.len();
    if cur.plane_rms < cfg.green_rms
        && n >= cfg.green_min_correspondences
        && normal_spread(corrs) > cfg.green_min_spread
    {
        Verdict::Green
    } else if cur.plane_rms < cfg.yellow_rms && n >= cfg.yellow_min_correspondences {
        Verdict::Yellow
    } else {
        Verdict::Red
    }
}

impl<T: Real> Default for SessionState<T> {
    fn default() -> Self {
        Self::new(SessionConfig::default())
    }
}

/// Appends `corr` and re-solves from scratch once three correspondences are
/// available. Degenerate geometry leaves the state without a solution and
/// the verdict red.
pub fn session_add<T: Real>(state: &SessionState<T>, corr: PlaneCorrespondence<T>) -> SessionState<T> {
    let mut next = state.clone();
    next.correspondences.push(corr);
    next.current = None;
    if next.correspondences.len() >= 3 {
        let solved = match calibrate_lidar_camera(&next.correspondences, &next.config.solver) {
            Ok(r) => Some(r),
            Err(LidarCamError::DidNotConverge(r)) => {
                log::warn!("session re-solve hit the iteration limit, using the last iterate");
                Some(*r)
            }
            Err(e) => {
                log::debug!("session re-solve skipped: {e}");
                None
            }
        };
        if let Some(r) = solved {
            next.history.push(r.plane_rms);
            next.current = Some(r);
        }
    }
    next.verdict = next.grade();
    next
}
