//! Interpolation error signal.
//!
//! A window of `w` points slides over the trajectory one point at a time.
//! For each position the first three points are extrapolated forward and the
//! last three backward to the middle point's timestamp; the error is the
//! distance from the midpoint of the two estimates to the actual middle
//! point. The first and last `(w - 1) / 2` points have no error value.
//!
//! Indices are 0-based: with `w = 7` the first error belongs to point 3.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{extrapolate, geo_midpoint, haversine_m, KernelKind, TimedPoint};
use crate::trajectory::Trajectory;

pub const DEFAULT_WINDOW: usize = 7;

/// Validates an error-signal window size: odd and at least 7.
pub fn check_window(w: usize) -> Result<()> {
    if w < 7 || w.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "window size must be odd and >= 7, got {w}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSignal {
    pub trajectory_id: String,
    pub window: usize,
    /// `(point_index, error_m)` pairs, strictly increasing in point index.
    pub values: Vec<(usize, f64)>,
    /// Set when the trajectory was too short for a single window.
    pub too_short: bool,
}

impl ErrorSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|&(_, e)| e)
    }

    /// Error value at a point index, if that point has one.
    pub fn error_at(&self, point_index: usize) -> Option<f64> {
        let first = self.values.first()?.0;
        let i = point_index.checked_sub(first)?;
        self.values.get(i).map(|&(_, e)| e)
    }
}

/// Error of the middle point of a single window.
pub fn window_error(window: &[TimedPoint], kernel: KernelKind) -> Result<f64> {
    check_window(window.len())?;
    let n = window.len();
    let mid = window[n / 2];
    let head = [window[0], window[1], window[2]];
    let tail = [window[n - 3], window[n - 2], window[n - 1]];
    let forward = extrapolate(&head, mid.t, kernel)?;
    let backward = extrapolate(&tail, mid.t, kernel)?;
    let centre = geo_midpoint(forward, backward)?;
    Ok(haversine_m(centre, mid.pos))
}

pub fn error_signal(traj: &Trajectory, w: usize, kernel: KernelKind) -> Result<ErrorSignal> {
    check_window(w)?;
    let half = w / 2;
    let points = traj.points();
    let too_short = points.len() < w;
    if too_short {
        warn!(
            "trajectory '{}' has {} points, fewer than window size {w}; error signal is empty",
            traj.id(),
            points.len()
        );
    }
    let values = points
        .windows(w)
        .enumerate()
        .map(|(start, win)| window_error(win, kernel).map(|e| (start + half, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSignal {
        trajectory_id: traj.id().to_string(),
        window: w,
        values,
        too_short,
    })
}
