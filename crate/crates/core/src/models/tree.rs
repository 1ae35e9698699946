//! CART for binary classification (Gini) and regression (variance reduction).
//!
//! Trees are grown on a multiset of row indices so that bootstrap and
//! weighted resamples need no copies of the data. Splits send `x <= threshold`
//! left; among equally good splits the first found (lowest feature index,
//! then lowest threshold) wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Task;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features drawn per node; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 8, min_leaf: 5, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Majority class (classification) or mean target (regression).
        value: f64,
        /// Class counts `[zeros, ones]`; `None` for regression leaves.
        class_counts: Option<[usize; 2]>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

/// `1 - Σ p_i²`.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::Domain("gini of an empty node".into()));
    }
    let n = total as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// `Var(parent) − (n_l Var(left) + n_r Var(right)) / n` with population variances.
pub fn variance_gain(parent: &[f64], left: &[f64], right: &[f64]) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::Domain("split children must be non-empty".into()));
    }
    let mut joined: Vec<f64> = left.iter().chain(right).copied().collect();
    let mut p = parent.to_vec();
    joined.sort_by(f64::total_cmp);
    p.sort_by(f64::total_cmp);
    if joined != p {
        return Err(Error::Domain("children do not partition the parent".into()));
    }
    let n = parent.len() as f64;
    let child = (left.len() as f64 * population_variance(left) + right.len() as f64 * population_variance(right)) / n;
    Ok((population_variance(parent) - child).max(0.0))
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    task: Task,
    params: TreeParams,
    width: usize,
    rng: Option<SplitMix64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn leaf(&self, idx: &[usize]) -> TreeNode {
        match self.task {
            Task::Classify => {
                let ones = idx.iter().filter(|&&i| self.y[i] > 0.5).count();
                let zeros = idx.len() - ones;
                TreeNode::Leaf { value: if ones > zeros { 1.0 } else { 0.0 }, class_counts: Some([zeros, ones]) }
            }
            Task::Regress => {
                let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
                TreeNode::Leaf { value: mean, class_counts: None }
            }
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match (self.params.max_features, self.rng.as_mut()) {
            (Some(k), Some(rng)) if k < self.width => rng.sample_indices(self.width, k),
            _ => (0..self.width).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            // Running sufficient statistics of the left child.
            let (total_sum, total_sq) =
                order.iter().fold((0.0, 0.0), |(s, q), &i| (s + self.y[i], q + self.y[i] * self.y[i]));
            let (mut left_sum, mut left_sq) = (0.0, 0.0);
            let parent_score = match self.task {
                Task::Classify => {
                    let p = total_sum / n as f64;
                    n as f64 * (1.0 - p * p - (1.0 - p) * (1.0 - p))
                }
                Task::Regress => total_sq - total_sum * total_sum / n as f64,
            };
            for pos in 0..n - 1 {
                let yi = self.y[order[pos]];
                left_sum += yi;
                left_sq += yi * yi;
                let nl = pos + 1;
                let nr = n - nl;
                let (a, b) = (self.x[order[pos]][f], self.x[order[pos + 1]][f]);
                if a == b || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (nlf, nrf) = (nl as f64, nr as f64);
                let child = match self.task {
                    Task::Classify => {
                        let pl = left_sum / nlf;
                        let pr = (total_sum - left_sum) / nrf;
                        nlf * 2.0 * pl * (1.0 - pl) + nrf * 2.0 * pr * (1.0 - pr)
                    }
                    Task::Regress => {
                        let right_sum = total_sum - left_sum;
                        (left_sq - left_sum * left_sum / nlf) + ((total_sq - left_sq) - right_sum * right_sum / nrf)
                    }
                };
                let gain = parent_score - child;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (a + b);
                    if !(threshold >= a && threshold < b) {
                        threshold = a;
                    }
                    best = Some(BestSplit { feature: f, threshold, gain });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12)
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> TreeNode {
        if depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf.max(1) || self.is_pure(idx) {
            return self.leaf(idx);
        }
        let Some(split) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

/// Grows a tree on the rows listed in `sample` (repeats allowed).
pub fn grow_tree(
    x: &[Vec<f64>],
    y: &[f64],
    sample: &[usize],
    task: Task,
    params: TreeParams,
    rng: Option<SplitMix64>,
) -> Result<TreeNode> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("tree on an empty sample".into()));
    }
    let width = x.first().map_or(0, Vec::len);
    let mut g = Grower { x, y, task, params, width, rng };
    Ok(g.grow(sample, 0))
}
