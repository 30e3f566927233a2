//! k-fold tune/test protocol.
//!
//! Moving objects are shuffled with the run seed and dealt round-robin into
//! `k` folds. Fold 0 tunes or trains each algorithm; every other fold is a
//! test fold whose score is the mean harmonic over its trajectories.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::eval::score::score;
use crate::eval::stats::{mann_whitney_u, MannWhitney};
use crate::seeds;
use crate::trajectory::Trajectory;

pub const TUNING_FOLD: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// trajectory id -> fold
    pub assignment: BTreeMap<String, usize>,
    pub tuning_fold: usize,
}

impl FoldPlan {
    pub fn new(trajs: &[Trajectory], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
        }
        let mut ids = BTreeSet::new();
        for t in trajs {
            if !ids.insert(t.id()) {
                return Err(Error::InvalidParameter(format!("duplicate trajectory id '{}'", t.id())));
            }
        }
        let objects: BTreeSet<&str> = trajs.iter().map(|t| t.object_id()).collect();
        if objects.len() < k {
            return Err(Error::TooFewObjects {
                folds: k,
                objects: objects.len(),
            });
        }
        let mut objects: Vec<&str> = objects.into_iter().collect();
        objects.shuffle(&mut ChaCha8Rng::seed_from_u64(seeds::derive(seed, "folds")));
        let fold_of: BTreeMap<&str, usize> = objects.iter().enumerate().map(|(i, &o)| (o, i % k)).collect();
        let assignment = trajs
            .iter()
            .map(|t| (t.id().to_string(), fold_of[t.object_id()]))
            .collect();
        Ok(Self {
            k,
            assignment,
            tuning_fold: TUNING_FOLD,
        })
    }

    pub fn fold_members<'a>(&self, trajs: &'a [Trajectory], fold: usize) -> Vec<&'a Trajectory> {
        trajs
            .iter()
            .filter(|t| self.assignment.get(t.id()) == Some(&fold))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub trajectories: usize,
    pub harmonic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: String,
    pub tuned: String,
    pub folds: Vec<FoldScore>,
    pub mean: f64,
    /// Sample standard deviation of the fold means.
    pub std: f64,
}

impl AlgorithmReport {
    pub fn fold_means(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.harmonic).collect()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn kfold_protocol(
    dataset: &[Trajectory],
    algorithm: &dyn Algorithm,
    plan: &FoldPlan,
    seed: u64,
) -> Result<AlgorithmReport> {
    let tuning: Vec<Trajectory> = plan
        .fold_members(dataset, plan.tuning_fold)
        .into_iter()
        .cloned()
        .collect();
    let tuned = algorithm.tune(&tuning, seed)?;

    let mut folds = Vec::new();
    for fold in (0..plan.k).filter(|&f| f != plan.tuning_fold) {
        let members = plan.fold_members(dataset, fold);
        let scores = members
            .par_iter()
            .map(|t| {
                let result = tuned.segmenter.segment(&t.without_labels())?;
                Ok(score(&result, t)?.harmonic)
            })
            .collect::<Result<Vec<f64>>>()?;
        if scores.is_empty() {
            return Err(Error::Empty(format!("fold {fold} has no trajectories")));
        }
        folds.push(FoldScore {
            fold,
            trajectories: scores.len(),
            harmonic: scores.iter().sum::<f64>() / scores.len() as f64,
        });
    }
    let (mean, std) = mean_std(&folds.iter().map(|f| f.harmonic).collect::<Vec<_>>());
    Ok(AlgorithmReport {
        algorithm: algorithm.name().to_string(),
        tuned: tuned.description,
        folds,
        mean,
        std,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub test: MannWhitney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub folds: usize,
    pub tuning_fold: usize,
    pub trajectories: usize,
    pub algorithms: Vec<AlgorithmReport>,
    pub pairwise: Vec<PairwiseTest>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Internal(e.to_string()))
    }

    /// Plain-text report: one block per algorithm with its per-fold scores,
    /// then one line per pairwise test.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!("folds: {}\n", self.folds));
        out.push_str(&format!("tuning_fold: {}\n", self.tuning_fold));
        out.push_str(&format!("trajectories: {}\n", self.trajectories));
        for a in &self.algorithms {
            out.push_str(&format!("\n[algorithm {}]\n", a.algorithm));
            out.push_str(&format!("tuned: {}\n", a.tuned));
            for f in &a.folds {
                out.push_str(&format!(
                    "fold {}: harmonic={:.6} trajectories={}\n",
                    f.fold, f.harmonic, f.trajectories
                ));
            }
            out.push_str(&format!("mean: {:.6}\n", a.mean));
            out.push_str(&format!("std: {:.6}\n", a.std));
        }
        if !self.pairwise.is_empty() {
            out.push_str("\n[pairwise mann-whitney]\n");
            for p in &self.pairwise {
                out.push_str(&format!(
                    "{} vs {}: U={} p={:.6e} exact={}\n",
                    p.a, p.b, p.test.u, p.test.p_value, p.test.exact
                ));
            }
        }
        out
    }

    /// `algorithm,fold,harmonic` rows for boxplots.
    pub fn fold_csv(&self) -> String {
        let mut out = String::from("algorithm,fold,harmonic\n");
        for a in &self.algorithms {
            for f in &a.folds {
                out.push_str(&format!("{},{},{}\n", a.algorithm, f.fold, f.harmonic));
            }
        }
        out
    }

    pub fn get(&self, name: &str) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.algorithm == name)
    }
}

/// Runs every algorithm on the same fold plan and tests every pair.
pub fn compare(
    dataset: &[Trajectory],
    algorithms: &[&dyn Algorithm],
    k: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    let plan = FoldPlan::new(dataset, k, seed)?;
    let reports = algorithms
        .iter()
        .map(|a| kfold_protocol(dataset, *a, &plan, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut pairwise = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            pairwise.push(PairwiseTest {
                a: reports[i].algorithm.clone(),
                b: reports[j].algorithm.clone(),
                test: mann_whitney_u(&reports[i].fold_means(), &reports[j].fold_means())?,
            });
        }
    }
    Ok(ComparisonReport {
        seed,
        folds: k,
        tuning_fold: plan.tuning_fold,
        trajectories: dataset.len(),
        algorithms: reports,
        pairwise,
    })
}
