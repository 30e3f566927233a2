//! Binary random forest over fixed-length numeric feature vectors.
//!
//! CART trees with Gini impurity, grown on per-tree bootstrap resamples.
//! Tree `i` draws all of its randomness from a generator seeded with
//! `seed + i`, so the fitted model does not depend on how trees are
//! scheduled across threads.

use std::path::Path;

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::KernelKind;
use crate::training::TrainingSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means `ceil(sqrt(q))`.
    pub features_per_split: Option<usize>,
    /// Draw `ceil(n / 2)` samples from each class instead of `n` overall.
    pub balanced_bootstrap: bool,
    /// Decision cutoff on the positive probability (inclusive).
    pub threshold: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            balanced_bootstrap: true,
            threshold: 0.5,
        }
    }
}

impl ForestParams {
    fn validate(&self, q: usize) -> Result<usize> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "decision threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        let fps = self
            .features_per_split
            .unwrap_or_else(|| (q as f64).sqrt().ceil() as usize);
        if fps == 0 || fps > q {
            return Err(Error::InvalidParameter(format!(
                "features_per_split must be in 1..={q}, got {fps}"
            )));
        }
        Ok(fps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Samples with `features[feature] <= threshold` go left.
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positive_fraction: f64,
        sample_count: usize,
    },
}

/// A tree stored as a node array with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(positive_fraction: f64, sample_count: usize) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf {
                positive_fraction,
                sample_count,
            }],
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf {
                    positive_fraction, ..
                } => return positive_fraction,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if features[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn check(&self, q: usize) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::ModelFormat("empty tree".into()));
        }
        for node in &self.nodes {
            match *node {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= q || left >= n || right >= n || !threshold.is_finite() {
                        return Err(Error::ModelFormat("malformed internal node".into()));
                    }
                }
                TreeNode::Leaf {
                    positive_fraction,
                    sample_count,
                } => {
                    if !(0.0..=1.0).contains(&positive_fraction) || sample_count == 0 {
                        return Err(Error::ModelFormat("malformed leaf".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub q: usize,
    pub seed: u64,
    pub params: ForestParams,
    /// Resolved number of features examined per split.
    pub features_per_split: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// A model that predicts `positive_fraction` for every input.
    pub fn constant(q: usize, positive_fraction: f64, params: ForestParams, seed: u64) -> Result<Self> {
        let features_per_split = params.validate(q)?;
        let trees = (0..params.n_trees).map(|_| Tree::leaf(positive_fraction, 1)).collect();
        Ok(Self {
            q,
            seed,
            params,
            features_per_split,
            trees,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.params.threshold
    }

    fn check_len(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.q {
            return Err(Error::FeatureLength {
                expected: self.q,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Mean of the per-tree leaf positive fractions.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        self.check_len(features)?;
        let total: f64 = self.trees.iter().map(|t| t.predict_proba(features)).sum();
        Ok(total / self.trees.len() as f64)
    }

    pub fn predict(&self, features: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(features)? >= self.params.threshold)
    }
}

/// Fits a forest to `samples`.
///
/// Single-class input produces a constant model and a warning.
pub fn fit(samples: &[TrainingSample], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("cannot fit a forest to zero samples".into()))?;
    let q = first.features.len();
    for s in samples {
        if s.features.len() != q {
            return Err(Error::FeatureLength {
                expected: q,
                actual: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite feature in sample from '{}' at {}",
                s.trajectory_id, s.start_index
            )));
        }
    }
    let features_per_split = params.validate(q)?;

    let positives: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label).collect();
    let negatives: Vec<usize> = (0..samples.len()).filter(|&i| !samples[i].label).collect();
    if positives.is_empty() || negatives.is_empty() {
        let fraction = if positives.is_empty() { 0.0 } else { 1.0 };
        warn!(
            "all {} training samples belong to one class; fitted model is constant {}",
            samples.len(),
            fraction
        );
        return ForestModel::constant(q, fraction, params.clone(), seed);
    }

    let x: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let y: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let grower = Grower {
        x: &x,
        y: &y,
        q,
        features_per_split,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let rows = if params.balanced_bootstrap {
                let per_class = samples.len().div_ceil(2);
                let mut rows = Vec::with_capacity(2 * per_class);
                for class in [&positives, &negatives] {
                    rows.extend((0..per_class).map(|_| class[rng.random_range(0..class.len())]));
                }
                rows
            } else {
                (0..samples.len()).map(|_| rng.random_range(0..samples.len())).collect()
            };
            grower.grow(rows, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        q,
        seed,
        params: params.clone(),
        features_per_split,
        trees,
    })
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Grower<'a> {
    x: &'a [&'a [f64]],
    y: &'a [bool],
    q: usize,
    features_per_split: usize,
    max_depth: usize,
    min_samples_leaf: usize,
}

impl Grower<'_> {
    fn grow(&self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = vec![TreeNode::Leaf {
            positive_fraction: 0.0,
            sample_count: 0,
        }];
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let n = rows.len();
            let pos = rows.iter().filter(|&&r| self.y[r]).count();
            let leaf = TreeNode::Leaf {
                positive_fraction: pos as f64 / n as f64,
                sample_count: n,
            };
            if depth >= self.max_depth || pos == 0 || pos == n || n < 2 * self.min_samples_leaf {
                nodes[slot] = leaf;
                continue;
            }
            let Some(split) = self.best_split(&rows, rng) else {
                nodes[slot] = leaf;
                continue;
            };
            debug_assert!(split.impurity <= gini(pos, n) + 1e-12);
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| self.x[r][split.feature] <= split.threshold);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(leaf.clone());
            nodes.push(leaf);
            nodes[slot] = TreeNode::Internal {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
        Tree { nodes }
    }

    /// Lowest weighted Gini over sampled features; ties go to the lowest
    /// feature index, then the lowest threshold.
    ///
    /// Candidates sit between consecutive distinct values. The stored
    /// threshold is the lower observed value, so routing depends only on
    /// feature order and survives any strictly increasing transform.
    fn best_split(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> Option<Split> {
        let n = rows.len();
        let total_pos = rows.iter().filter(|&&r| self.y[r]).count();
        let mut features = index::sample(rng, self.q, self.features_per_split).into_vec();
        features.sort_unstable();

        let mut best: Option<Split> = None;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
        for &f in &features {
            column.clear();
            column.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_pos = 0;
            for k in 0..n - 1 {
                if column[k].1 {
                    left_pos += 1;
                }
                let (lo, hi) = (column[k].0, column[k + 1].0);
                if lo == hi {
                    continue;
                }
                let n_left = k + 1;
                let n_right = n - n_left;
                if n_left < self.min_samples_leaf || n_right < self.min_samples_leaf {
                    continue;
                }
                let impurity = (n_left as f64 * gini(left_pos, n_left)
                    + n_right as f64 * gini(total_pos - left_pos, n_right))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Split {
                        feature: f,
                        threshold: lo,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

pub const MODEL_SCHEMA: &str = "wsii-forest";
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Error-signal settings the model was trained under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSettings {
    pub window: usize,
    pub kernel: KernelKind,
}

/// On-disk model: a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub version: u32,
    pub signal: SignalSettings,
    pub model: ForestModel,
}

impl ModelFile {
    pub fn new(signal: SignalSettings, model: ForestModel) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_string(),
            version: MODEL_SCHEMA_VERSION,
            signal,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let schema = value.get("schema").and_then(|v| v.as_str());
        let version = value.get("version").and_then(|v| v.as_u64());
        if schema != Some(MODEL_SCHEMA) {
            return Err(Error::ModelFormat(format!(
                "expected schema '{MODEL_SCHEMA}', found {schema:?}"
            )));
        }
        if version != Some(MODEL_SCHEMA_VERSION as u64) {
            return Err(Error::ModelFormat(format!(
                "unsupported schema version {version:?}; this build reads version {MODEL_SCHEMA_VERSION}"
            )));
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let m = &file.model;
        if m.trees.len() != m.params.n_trees || m.features_per_split > m.q || m.q == 0 {
            return Err(Error::ModelFormat("inconsistent forest header".into()));
        }
        for tree in &m.trees {
            tree.check(m.q)?;
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFormat(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
