//! Reference segmenters: OWS (error-signal threshold), SPD (stay points)
//! and CB-SMoT (clustering along the trajectory). All produce
//! [`SegmentationResult`]s under the same partition contract as WS-II.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::score::score;
use crate::geo::{haversine_m, KernelKind};
use crate::segment::{collapse_runs, SegmentationResult, Segmenter};
use crate::signal::{check_window, error_signal, ErrorSignal};
use crate::trajectory::Trajectory;

fn positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OwsParams {
    pub w: usize,
    pub kernel: KernelKind,
    pub epsilon: f64,
}

impl OwsParams {
    pub fn new(w: usize, kernel: KernelKind, epsilon: f64) -> Result<Self> {
        check_window(w)?;
        positive("epsilon", epsilon)?;
        Ok(Self { w, kernel, epsilon })
    }
}

fn ows_from_signal(traj: &Trajectory, signal: &ErrorSignal, epsilon: f64) -> Result<SegmentationResult> {
    let flagged: Vec<usize> = signal
        .values
        .iter()
        .filter(|&&(_, e)| e > epsilon)
        .map(|&(i, _)| i)
        .collect();
    let splits = collapse_runs(&flagged, signal)?;
    SegmentationResult::from_splits(traj.id(), traj.len(), splits)
}

pub fn ows_segment(traj: &Trajectory, p: &OwsParams) -> Result<SegmentationResult> {
    let signal = error_signal(traj, p.w, p.kernel)?;
    ows_from_signal(traj, &signal, p.epsilon)
}

/// Linear-interpolated percentile (`pct` in `[0, 100]`) of unsorted values.
fn percentile(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = pct / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Candidate thresholds 5, 10, ... meters up to the 95th percentile of the
/// pooled error values (at least one candidate).
pub fn epsilon_grid(signals: &[ErrorSignal]) -> Vec<f64> {
    let errors: Vec<f64> = signals.iter().flat_map(|s| s.errors()).collect();
    let top = percentile(&errors, 95.0).unwrap_or(0.0);
    let mut grid: Vec<f64> = (1..).map(|k| 5.0 * k as f64).take_while(|&e| e <= top).collect();
    if grid.is_empty() {
        grid.push(5.0);
    }
    grid
}

/// Picks the candidate with the best mean harmonic score over `tuning`;
/// ties go to the smallest epsilon.
pub fn ows_tune_epsilon(tuning: &[Trajectory], w: usize, kernel: KernelKind, grid: &[f64]) -> Result<f64> {
    if tuning.is_empty() {
        return Err(Error::Empty("OWS tuning fold has no trajectories".into()));
    }
    if grid.is_empty() {
        return Err(Error::Empty("OWS epsilon grid is empty".into()));
    }
    let signals = tuning
        .iter()
        .map(|t| error_signal(t, w, kernel))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for &eps in &sorted {
        positive("epsilon", eps)?;
        let mut total = 0.0;
        for (t, s) in tuning.iter().zip(&signals) {
            total += score(&ows_from_signal(t, s, eps)?, t)?.harmonic;
        }
        let mean = total / tuning.len() as f64;
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((eps, mean));
        }
    }
    Ok(best.expect("non-empty grid").0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdParams {
    pub theta_d: f64,
    pub theta_t: f64,
}

impl SpdParams {
    pub fn new(theta_d: f64, theta_t: f64) -> Result<Self> {
        positive("theta_d", theta_d)?;
        positive("theta_t", theta_t)?;
        Ok(Self { theta_d, theta_t })
    }
}

/// Splits around each `(start, end)` stop run; everything between stops is
/// a move segment.
fn splits_around(stops: &[(usize, usize)], n: usize) -> Vec<usize> {
    let mut splits = Vec::new();
    for &(a, b) in stops {
        if a > 0 {
            splits.push(a - 1);
        }
        if b + 1 < n {
            splits.push(b);
        }
    }
    splits
}

/// Stay-point runs as inclusive `(start, end)` index pairs.
pub fn stay_points(traj: &Trajectory, p: &SpdParams) -> Vec<(usize, usize)> {
    let pts = traj.points();
    let n = pts.len();
    let mut stays = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && haversine_m(pts[i].pos, pts[j].pos) <= p.theta_d {
            j += 1;
        }
        if pts[j - 1].t - pts[i].t > p.theta_t {
            stays.push((i, j - 1));
            i = j;
        } else if j == n {
            // every later anchor also reaches the end with less dwell time
            break;
        } else {
            i += 1;
        }
    }
    stays
}

pub fn spd_segment(traj: &Trajectory, p: &SpdParams) -> Result<SegmentationResult> {
    let splits = splits_around(&stay_points(traj, p), traj.len());
    SegmentationResult::from_splits(traj.id(), traj.len(), splits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbSmotParams {
    pub eps: f64,
    pub min_time: f64,
}

impl CbSmotParams {
    pub fn new(eps: f64, min_time: f64) -> Result<Self> {
        positive("eps", eps)?;
        positive("min_time", min_time)?;
        Ok(Self { eps, min_time })
    }
}

/// Linear neighborhood of every point: the maximal run of consecutive
/// points whose path distance from it is at most `eps`.
pub fn linear_neighborhoods(traj: &Trajectory, eps: f64) -> Vec<(usize, usize)> {
    let pts = traj.points();
    let mut cumulative = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    for (k, p) in pts.iter().enumerate() {
        if k > 0 {
            acc += haversine_m(pts[k - 1].pos, p.pos);
        }
        cumulative.push(acc);
    }
    (0..pts.len())
        .map(|i| {
            let lo = cumulative.partition_point(|&c| cumulative[i] - c > eps);
            let hi = cumulative.partition_point(|&c| c - cumulative[i] <= eps) - 1;
            (lo, hi)
        })
        .collect()
}

/// Stop clusters: unions of overlapping core-point neighborhoods.
pub fn stop_clusters(traj: &Trajectory, p: &CbSmotParams) -> Vec<(usize, usize)> {
    let pts = traj.points();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    // neighborhoods come out sorted by start, since cumulative distance is monotone
    for (lo, hi) in linear_neighborhoods(traj, p.eps) {
        if pts[hi].t - pts[lo].t < p.min_time {
            continue;
        }
        match clusters.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => clusters.push((lo, hi)),
        }
    }
    clusters
}

pub fn cbsmot_segment(traj: &Trajectory, p: &CbSmotParams) -> Result<SegmentationResult> {
    let splits = splits_around(&stop_clusters(traj, p), traj.len());
    SegmentationResult::from_splits(traj.id(), traj.len(), splits)
}

impl Segmenter for OwsParams {
    fn segment(&self, traj: &Trajectory) -> Result<SegmentationResult> {
        ows_segment(traj, self)
    }
}

impl Segmenter for SpdParams {
    fn segment(&self, traj: &Trajectory) -> Result<SegmentationResult> {
        spd_segment(traj, self)
    }
}

impl Segmenter for CbSmotParams {
    fn segment(&self, traj: &Trajectory) -> Result<SegmentationResult> {
        cbsmot_segment(traj, self)
    }
}
