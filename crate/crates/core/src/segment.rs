//! Segmentation results and the WS-II inference pipeline.
//!
//! Every `q`-window of the error signal is classified once. Each point
//! collects one vote per window that covers it; points with a strict
//! majority of positive votes are flagged. Each maximal run of flagged
//! points becomes a single partitioning position at the run's largest
//! error (earliest on ties).
//!
//! Segments shorter than `q` can be missed: their transitions fall inside
//! windows that mostly straddle neighboring behavior.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::geo::KernelKind;
use crate::signal::{check_window, error_signal, ErrorSignal};
use crate::training::check_q;
use crate::trajectory::Trajectory;

/// Anything that partitions a trajectory into consecutive segments.
pub trait Segmenter: Send + Sync {
    fn segment(&self, traj: &Trajectory) -> Result<SegmentationResult>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub trajectory_id: String,
    /// Sorted indices of the last point of every segment but the final one.
    pub split_indices: Vec<usize>,
    /// Inclusive `(start, end)` spans covering `0..n` in order.
    pub segments: Vec<(usize, usize)>,
}

impl SegmentationResult {
    /// Builds spans from partitioning positions on an `n`-point trajectory.
    pub fn from_splits(trajectory_id: impl Into<String>, n: usize, mut splits: Vec<usize>) -> Result<Self> {
        let trajectory_id = trajectory_id.into();
        splits.sort_unstable();
        splits.dedup();
        if let Some(&last) = splits.last() {
            if last + 1 >= n {
                return Err(Error::Internal(format!(
                    "split at {last} leaves an empty segment on '{trajectory_id}' ({n} points)"
                )));
            }
        }
        let mut segments = Vec::with_capacity(splits.len() + 1);
        if n > 0 {
            let mut start = 0;
            for &s in &splits {
                segments.push((start, s));
                start = s + 1;
            }
            segments.push((start, n - 1));
        }
        Ok(Self {
            trajectory_id,
            split_indices: splits,
            segments,
        })
    }

    /// The whole trajectory as one segment.
    pub fn single(trajectory_id: impl Into<String>, n: usize) -> Self {
        Self::from_splits(trajectory_id, n, Vec::new()).expect("no splits")
    }

    /// Checks the partition contract against a trajectory of `n` points.
    pub fn check_partition(&self, n: usize) -> Result<()> {
        let bad = |why: &str| Err(Error::Internal(format!("'{}': {why}", self.trajectory_id)));
        if n == 0 {
            return if self.segments.is_empty() { Ok(()) } else { bad("segments on empty trajectory") };
        }
        if self.segments.len() != self.split_indices.len() + 1 {
            return bad("segment count is not split count + 1");
        }
        if self.segments[0].0 != 0 || self.segments.last().unwrap().1 != n - 1 {
            return bad("segments do not cover the trajectory");
        }
        for (i, &(s, e)) in self.segments.iter().enumerate() {
            if s > e {
                return bad("empty segment");
            }
            if i > 0 && s != self.segments[i - 1].1 + 1 {
                return bad("segments not consecutive");
            }
            if i < self.split_indices.len() && self.split_indices[i] != e {
                return bad("split does not end a segment");
            }
        }
        Ok(())
    }

    /// Segment id of every point.
    pub fn point_segments(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (id, &(s, e)) in self.segments.iter().enumerate() {
            out.extend(std::iter::repeat_n(id, e - s + 1));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointVotes {
    pub point_index: usize,
    pub cast: usize,
    pub positive: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VoteTable {
    pub entries: Vec<PointVotes>,
    /// Set when the signal held fewer than `q` values.
    pub too_short: bool,
}

/// Window predictions over a signal: entry `j` is the class of the window
/// covering signal values `j..j + q`.
pub fn classify_windows(signal: &ErrorSignal, model: &ForestModel, q: usize) -> Result<Vec<bool>> {
    check_q(q)?;
    if model.q != q {
        return Err(Error::WindowMismatch(format!(
            "model was trained with q = {}, segmentation requested q = {q}",
            model.q
        )));
    }
    let errors: Vec<f64> = signal.errors().collect();
    if errors.len() < q {
        return Ok(Vec::new());
    }
    errors.windows(q).map(|w| model.predict(w)).collect()
}

/// Tallies window predictions onto the points each window covers.
pub fn tally(signal: &ErrorSignal, predictions: &[bool], q: usize) -> VoteTable {
    if predictions.is_empty() {
        return VoteTable {
            entries: Vec::new(),
            too_short: true,
        };
    }
    debug_assert_eq!(predictions.len() + q - 1, signal.len());
    let mut entries: Vec<PointVotes> = signal
        .values
        .iter()
        .map(|&(point_index, _)| PointVotes {
            point_index,
            cast: 0,
            positive: 0,
        })
        .collect();
    for (j, &p) in predictions.iter().enumerate() {
        for e in &mut entries[j..j + q] {
            e.cast += 1;
            e.positive += usize::from(p);
        }
    }
    VoteTable {
        entries,
        too_short: false,
    }
}

pub fn vote(signal: &ErrorSignal, model: &ForestModel, q: usize) -> Result<VoteTable> {
    let predictions = classify_windows(signal, model, q)?;
    if predictions.is_empty() {
        warn!(
            "trajectory '{}': error signal has {} values, fewer than q = {q}; no votes",
            signal.trajectory_id,
            signal.len()
        );
    }
    Ok(tally(signal, &predictions, q))
}

/// Points whose positive votes are a strict majority of the votes cast.
pub fn decide(votes: &VoteTable) -> Vec<usize> {
    votes
        .entries
        .iter()
        .filter(|v| 2 * v.positive > v.cast)
        .map(|v| v.point_index)
        .collect()
}

/// One split per maximal run of consecutive flagged indices, at the run's
/// largest error (earliest index on ties).
pub fn collapse_runs(flagged: &[usize], signal: &ErrorSignal) -> Result<Vec<usize>> {
    let mut flagged = flagged.to_vec();
    flagged.sort_unstable();
    flagged.dedup();
    let error = |i: usize| {
        signal
            .error_at(i)
            .ok_or_else(|| Error::Internal(format!("flagged index {i} has no error value")))
    };
    let mut splits = Vec::new();
    let mut k = 0;
    while k < flagged.len() {
        let mut best = flagged[k];
        let mut best_err = error(best)?;
        let mut j = k + 1;
        while j < flagged.len() && flagged[j] == flagged[j - 1] + 1 {
            let e = error(flagged[j])?;
            if e > best_err {
                best = flagged[j];
                best_err = e;
            }
            j += 1;
        }
        splits.push(best);
        k = j;
    }
    Ok(splits)
}

/// Trained WS-II segmenter.
#[derive(Debug, Clone)]
pub struct WsIi {
    pub model: ForestModel,
    pub window: usize,
    pub q: usize,
    pub kernel: KernelKind,
}

impl WsIi {
    pub fn new(model: ForestModel, window: usize, q: usize, kernel: KernelKind) -> Result<Self> {
        check_window(window)?;
        check_q(q)?;
        if model.q != q {
            return Err(Error::WindowMismatch(format!(
                "model was trained with q = {}, segmentation requested q = {q}",
                model.q
            )));
        }
        Ok(Self {
            model,
            window,
            q,
            kernel,
        })
    }
}

impl Segmenter for WsIi {
    fn segment(&self, traj: &Trajectory) -> Result<SegmentationResult> {
        segment(traj, &self.model, self.window, self.q, self.kernel)
    }
}

pub fn segment(
    traj: &Trajectory,
    model: &ForestModel,
    w: usize,
    q: usize,
    kernel: KernelKind,
) -> Result<SegmentationResult> {
    let signal = error_signal(traj, w, kernel)?;
    let votes = vote(&signal, model, q)?;
    let flagged = decide(&votes);
    let splits = collapse_runs(&flagged, &signal)?;
    SegmentationResult::from_splits(traj.id(), traj.len(), splits)
}
