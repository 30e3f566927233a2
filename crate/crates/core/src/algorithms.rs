//! Tunable algorithms for the evaluation protocol: each one turns a tuning
//! fold into a ready-to-use [`Segmenter`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{epsilon_grid, ows_tune_epsilon, CbSmotParams, OwsParams, SpdParams};
use crate::error::{Error, Result};
use crate::eval::score::score;
use crate::forest::{fit, ForestModel, ForestParams};
use crate::geo::{haversine_m, KernelKind};
use crate::seeds;
use crate::segment::{Segmenter, WsIi};
use crate::signal::{check_window, error_signal};
use crate::training::{build_training_set, check_q, splits_from_labels, TrainingSample};
use crate::trajectory::Trajectory;

/// A segmenter fitted to a tuning fold, with a short description of the
/// chosen parameters.
pub struct Tuned {
    pub segmenter: Box<dyn Segmenter>,
    pub description: String,
}

pub trait Algorithm: Send + Sync {
    fn name(&self) -> &str;
    fn tune(&self, tuning: &[Trajectory], seed: u64) -> Result<Tuned>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    WsIi,
    Ows,
    Spd,
    CbSmot,
}

impl AlgorithmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::WsIi => "wsii",
            AlgorithmKind::Ows => "ows",
            AlgorithmKind::Spd => "spd",
            AlgorithmKind::CbSmot => "cbsmot",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "wsii" => Ok(AlgorithmKind::WsIi),
            "ows" => Ok(AlgorithmKind::Ows),
            "spd" => Ok(AlgorithmKind::Spd),
            "cbsmot" => Ok(AlgorithmKind::CbSmot),
            _ => Err(Error::InvalidParameter(format!(
                "unknown algorithm '{s}' (expected wsii, ows, spd or cbsmot)"
            ))),
        }
    }
}

/// Training samples from every labeled trajectory, in input order.
pub fn training_samples(trajs: &[Trajectory], w: usize, q: usize, kernel: KernelKind) -> Result<Vec<TrainingSample>> {
    let per_traj = trajs
        .par_iter()
        .map(|t| {
            let signal = error_signal(t, w, kernel)?;
            let splits = splits_from_labels(t)?;
            build_training_set(&signal, &splits, q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_traj.into_iter().flatten().collect())
}

pub fn train_model(
    trajs: &[Trajectory],
    w: usize,
    q: usize,
    kernel: KernelKind,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    check_window(w)?;
    check_q(q)?;
    let samples = training_samples(trajs, w, q, kernel)?;
    fit(&samples, params, seed)
}

#[derive(Debug, Clone)]
pub struct WsIiAlgorithm {
    pub window: usize,
    pub q: usize,
    pub kernel: KernelKind,
    pub forest: ForestParams,
}

impl Default for WsIiAlgorithm {
    fn default() -> Self {
        Self {
            window: 7,
            q: 7,
            kernel: KernelKind::RandomWalk,
            forest: ForestParams::default(),
        }
    }
}

impl Algorithm for WsIiAlgorithm {
    fn name(&self) -> &str {
        "wsii"
    }

    fn tune(&self, tuning: &[Trajectory], seed: u64) -> Result<Tuned> {
        let model = train_model(
            tuning,
            self.window,
            self.q,
            self.kernel,
            &self.forest,
            seeds::derive(seed, "forest"),
        )?;
        let description = format!(
            "w={} q={} kernel={} trees={}",
            self.window, self.q, self.kernel, self.forest.n_trees
        );
        Ok(Tuned {
            segmenter: Box::new(WsIi::new(model, self.window, self.q, self.kernel)?),
            description,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OwsAlgorithm {
    pub window: usize,
    pub kernel: KernelKind,
}

impl Default for OwsAlgorithm {
    fn default() -> Self {
        Self {
            window: 7,
            kernel: KernelKind::RandomWalk,
        }
    }
}

impl Algorithm for OwsAlgorithm {
    fn name(&self) -> &str {
        "ows"
    }

    fn tune(&self, tuning: &[Trajectory], _seed: u64) -> Result<Tuned> {
        let signals = tuning
            .iter()
            .map(|t| error_signal(t, self.window, self.kernel))
            .collect::<Result<Vec<_>>>()?;
        let grid = epsilon_grid(&signals);
        let epsilon = ows_tune_epsilon(tuning, self.window, self.kernel, &grid)?;
        Ok(Tuned {
            segmenter: Box::new(OwsParams::new(self.window, self.kernel, epsilon)?),
            description: format!("w={} kernel={} epsilon={epsilon}", self.window, self.kernel),
        })
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Median step length (m) and median sampling interval (s) of a fold; the
/// stop-detection grids are expressed as multiples of these.
fn fold_scales(trajs: &[Trajectory]) -> Result<(f64, f64)> {
    let mut steps = Vec::new();
    let mut intervals = Vec::new();
    for t in trajs {
        for pair in t.points().windows(2) {
            steps.push(haversine_m(pair[0].pos, pair[1].pos));
            intervals.push(pair[1].t - pair[0].t);
        }
    }
    let step = median(steps).ok_or_else(|| Error::Empty("tuning fold has no consecutive points".into()))?;
    let interval = median(intervals).expect("same length as steps");
    Ok((step.max(1.0), interval.max(1.0)))
}

/// Mean harmonic score of `seg` over a labeled fold.
fn mean_harmonic(seg: &dyn Segmenter, trajs: &[Trajectory]) -> Result<f64> {
    let scores = trajs
        .par_iter()
        .map(|t| Ok(score(&seg.segment(t)?, t)?.harmonic))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Grid search; ties go to the earliest candidate.
fn grid_search<S: Segmenter + Clone>(candidates: Vec<S>, tuning: &[Trajectory]) -> Result<S> {
    if tuning.is_empty() {
        return Err(Error::Empty("tuning fold has no trajectories".into()));
    }
    let mut best: Option<(S, f64)> = None;
    for c in candidates {
        let m = mean_harmonic(&c, tuning)?;
        if best.as_ref().is_none_or(|(_, b)| m > *b) {
            best = Some((c, m));
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::Empty("empty parameter grid".into()))
}

const DISTANCE_FACTORS: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
const TIME_FACTORS: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, Default)]
pub struct SpdAlgorithm;

impl Algorithm for SpdAlgorithm {
    fn name(&self) -> &str {
        "spd"
    }

    fn tune(&self, tuning: &[Trajectory], _seed: u64) -> Result<Tuned> {
        let (step, interval) = fold_scales(tuning)?;
        let mut grid = Vec::new();
        for d in DISTANCE_FACTORS {
            for t in TIME_FACTORS {
                grid.push(SpdParams::new(d * step, t * interval)?);
            }
        }
        let p = grid_search(grid, tuning)?;
        Ok(Tuned {
            description: format!("theta_d={} theta_t={}", p.theta_d, p.theta_t),
            segmenter: Box::new(p),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct CbSmotAlgorithm;

impl Algorithm for CbSmotAlgorithm {
    fn name(&self) -> &str {
        "cbsmot"
    }

    fn tune(&self, tuning: &[Trajectory], _seed: u64) -> Result<Tuned> {
        let (step, interval) = fold_scales(tuning)?;
        let mut grid = Vec::new();
        for d in DISTANCE_FACTORS {
            for t in TIME_FACTORS {
                grid.push(CbSmotParams::new(d * step, t * interval)?);
            }
        }
        let p = grid_search(grid, tuning)?;
        Ok(Tuned {
            description: format!("eps={} min_time={}", p.eps, p.min_time),
            segmenter: Box::new(p),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_parse() {
        for k in [AlgorithmKind::WsIi, AlgorithmKind::Ows, AlgorithmKind::Spd, AlgorithmKind::CbSmot] {
            assert_eq!(k.as_str().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert_eq!("CB-SMoT".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::CbSmot);
        assert_eq!("WS-II".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::WsIi);
        assert!("grasp".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
