//! Purity and coverage of a segmentation against ground-truth labels.
//!
//! For a computed segment `s`:
//! - purity is the share of `s` carrying its most frequent label;
//! - coverage is the share of `g*` inside `s`, where `g*` is the
//!   ground-truth segment contributing the most points to `s` (earliest on
//!   ties).
//!
//! Trajectory-level purity and coverage weight each segment by its length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::SegmentationResult;
use crate::training::splits_from_labels;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub purity: f64,
    pub coverage: f64,
    pub harmonic: f64,
}

impl SegmentScore {
    pub fn new(purity: f64, coverage: f64) -> Self {
        let harmonic = if purity + coverage == 0.0 {
            0.0
        } else {
            2.0 * purity * coverage / (purity + coverage)
        };
        Self {
            purity,
            coverage,
            harmonic,
        }
    }
}

pub fn score(result: &SegmentationResult, truth: &Trajectory) -> Result<SegmentScore> {
    let labels = truth
        .labels()
        .ok_or_else(|| Error::MissingLabels(truth.id().to_string()))?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::Empty(format!("trajectory '{}' has no points", truth.id())));
    }
    result.check_partition(n)?;
    let truth_result = SegmentationResult::from_splits(truth.id(), n, splits_from_labels(truth)?.split_indices)?;
    let truth_of_point = truth_result.point_segments();

    let mut purity_sum = 0.0;
    let mut coverage_sum = 0.0;
    for &(start, end) in &result.segments {
        let len = end - start + 1;

        let mut counts: HashMap<&str, usize> = HashMap::new();
        for label in &labels[start..=end] {
            *counts.entry(label.as_str()).or_default() += 1;
        }
        let modal = counts.values().copied().max().unwrap_or(0);
        purity_sum += modal as f64;

        // truth segments are contiguous, so contributions arrive in order
        let mut best_seg = truth_of_point[start];
        let mut best_count = 0;
        let mut run_seg = best_seg;
        let mut run_count = 0;
        for &g in &truth_of_point[start..=end] {
            if g != run_seg {
                run_seg = g;
                run_count = 0;
            }
            run_count += 1;
            if run_count > best_count {
                best_seg = run_seg;
                best_count = run_count;
            }
        }
        let (g_start, g_end) = truth_result.segments[best_seg];
        coverage_sum += len as f64 * best_count as f64 / (g_end - g_start + 1) as f64;
    }
    Ok(SegmentScore::new(purity_sum / n as f64, coverage_sum / n as f64))
}
