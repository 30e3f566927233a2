//! Turns labeled trajectories into fixed-length error windows tagged with
//! whether they contain a ground-truth partitioning position.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ErrorSignal;
use crate::trajectory::Trajectory;

/// Validates a classification window length: odd and at least 3.
pub fn check_q(q: usize) -> Result<()> {
    if q < 3 || q.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "classification window q must be odd and >= 3, got {q}"
        )));
    }
    Ok(())
}

/// Point indices that end a ground-truth segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSplits {
    pub trajectory_id: String,
    pub split_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub features: Vec<f64>,
    pub label: bool,
    pub trajectory_id: String,
    /// First point index covered by the window.
    pub start_index: usize,
}

/// Index `i` is a split iff `label[i] != label[i + 1]`.
pub fn splits_from_labels(traj: &Trajectory) -> Result<GroundTruthSplits> {
    let labels = traj
        .labels()
        .ok_or_else(|| Error::MissingLabels(traj.id().to_string()))?;
    let split_indices = labels
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[0] != pair[1])
        .map(|(i, _)| i)
        .collect();
    Ok(GroundTruthSplits {
        trajectory_id: traj.id().to_string(),
        split_indices,
    })
}

/// One sample per contiguous run of `q` signal entries.
///
/// A sample is positive iff a split point index lies within the point span
/// covered by its run, endpoints included.
pub fn build_training_set(
    signal: &ErrorSignal,
    splits: &GroundTruthSplits,
    q: usize,
) -> Result<Vec<TrainingSample>> {
    check_q(q)?;
    if signal.len() < q {
        warn!(
            "trajectory '{}': error signal has {} values, fewer than q = {q}; no samples",
            signal.trajectory_id,
            signal.len()
        );
        return Ok(Vec::new());
    }
    let samples = signal
        .values
        .windows(q)
        .map(|run| {
            let first = run[0].0;
            let last = run[q - 1].0;
            let label = splits
                .split_indices
                .iter()
                .any(|&s| first <= s && s <= last);
            TrainingSample {
                features: run.iter().map(|&(_, e)| e).collect(),
                label,
                trajectory_id: signal.trajectory_id.clone(),
                start_index: first,
            }
        })
        .collect();
    Ok(samples)
}

/// Global standardization of feature values. Off by default: tree models
/// only see feature order, so this exists for users feeding other models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn fit(samples: &[TrainingSample]) -> Result<Self> {
        let values: Vec<f64> = samples.iter().flat_map(|s| s.features.iter().copied()).collect();
        if values.is_empty() {
            return Err(Error::Empty("no feature values to standardize".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        Ok(Self { mean, std })
    }

    pub fn apply(&self, features: &mut [f64]) {
        for f in features {
            *f = (*f - self.mean) / self.std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TimedPoint;
    use proptest::prelude::*;

    fn labeled(labels: &[&str]) -> Trajectory {
        let pts = (0..labels.len())
            .map(|i| TimedPoint::new(0.0, 0.0, i as f64).unwrap())
            .collect();
        Trajectory::new("t", pts, Some(labels.iter().map(|s| s.to_string()).collect())).unwrap()
    }

    fn signal(first: usize, n: usize) -> ErrorSignal {
        ErrorSignal {
            trajectory_id: "t".into(),
            window: 7,
            values: (0..n).map(|i| (first + i, i as f64)).collect(),
            too_short: false,
        }
    }

    fn splits(idx: &[usize]) -> GroundTruthSplits {
        GroundTruthSplits {
            trajectory_id: "t".into(),
            split_indices: idx.to_vec(),
        }
    }

    #[test]
    fn splits_examples() {
        assert!(splits_from_labels(&labeled(&["A", "A", "A"])).unwrap().split_indices.is_empty());
        assert_eq!(splits_from_labels(&labeled(&["A", "A", "B", "B"])).unwrap().split_indices, vec![1]);
        assert_eq!(
            splits_from_labels(&labeled(&["A", "B", "B", "A", "A"])).unwrap().split_indices,
            vec![0, 2]
        );
    }

    #[test]
    fn splits_require_labels() {
        let t = labeled(&["A", "B"]).without_labels();
        assert!(matches!(splits_from_labels(&t), Err(Error::MissingLabels(_))));
    }

    #[test]
    fn sample_count_and_no_splits() {
        let s = build_training_set(&signal(3, 10), &splits(&[]), 7).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| !x.label));
        assert!(s.iter().all(|x| x.features.len() == 7));
    }

    #[test]
    fn short_signal_yields_nothing() {
        assert!(build_training_set(&signal(3, 6), &splits(&[5]), 7).unwrap().is_empty());
        assert!(build_training_set(&signal(3, 10), &splits(&[]), 4).is_err());
    }

    #[test]
    fn standardizer_centers_values() {
        let mut s = build_training_set(&signal(3, 10), &splits(&[]), 7).unwrap();
        let st = Standardizer::fit(&s).unwrap();
        for x in &mut s {
            st.apply(&mut x.features);
        }
        let all: Vec<f64> = s.iter().flat_map(|x| x.features.clone()).collect();
        assert!(all.iter().sum::<f64>().abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn positives_match_brute_force(
            n in 3usize..40, first in 0usize..5, q_half in 1usize..5,
            raw_splits in proptest::collection::btree_set(0usize..50, 0..5),
        ) {
            let q = 2 * q_half + 1;
            let sig = signal(first, n);
            let sp: Vec<usize> = raw_splits.into_iter().collect();
            let samples = build_training_set(&sig, &splits(&sp), q).unwrap();
            prop_assert_eq!(samples.len(), (n + 1).saturating_sub(q));
            // brute force: count (split, window) incidences point by point
            let mut incidences = 0;
            for (j, sample) in samples.iter().enumerate() {
                let covered: Vec<usize> = (0..q).map(|k| sig.values[j + k].0).collect();
                let hits = sp.iter().filter(|s| covered.contains(s)).count();
                incidences += hits;
                prop_assert_eq!(sample.label, hits > 0);
                prop_assert_eq!(sample.start_index, covered[0]);
            }
            if sp.len() <= 1 {
                prop_assert_eq!(samples.iter().filter(|s| s.label).count(), incidences);
            }
        }

        #[test]
        fn isolated_split_gives_one_run(n in 7usize..40, pos in 0.0f64..1.0) {
            let q = 7;
            let sig = signal(3, n);
            let s = 3 + ((n - 1) as f64 * pos) as usize;
            let samples = build_training_set(&sig, &splits(&[s]), q).unwrap();
            let labels: Vec<bool> = samples.iter().map(|x| x.label).collect();
            let first = labels.iter().position(|&l| l).unwrap();
            let count = labels.iter().filter(|&&l| l).count();
            prop_assert!(labels[first..first + count].iter().all(|&l| l));
            // windows covering s: limited by q and by how many slides exist on each side
            let slides = samples.len();
            let j = s - 3;
            let lo = j.saturating_sub(q - 1);
            let hi = j.min(slides - 1);
            prop_assert_eq!(count, hi - lo + 1);
            prop_assert_eq!(count, count.min(q).min(slides));
        }
    }
}
