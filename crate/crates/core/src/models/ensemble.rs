//! Tree ensembles: bagging / random forest, AdaBoost (classification) and
//! least-squares gradient boosting (regression).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::models::tree::{grow_tree, TreeNode, TreeParams};
use crate::models::Task;
use crate::rng::SplitMix64;

/// Largest stage weight; reached when a round's weighted error is zero.
pub fn max_stage_weight() -> f64 {
    0.5 * 1e6f64.ln()
}

/// `α = ½ ln((1 − ε) / ε)`, capped at `ln(1e6)/2` as `ε → 0` (and symmetric as `ε → 1`).
pub fn adaboost_stage_weight(weighted_error: f64) -> f64 {
    let floor = 1.0 / (1.0 + 1e6);
    if weighted_error <= floor {
        max_stage_weight()
    } else if weighted_error >= 1.0 - floor {
        -max_stage_weight()
    } else {
        0.5 * ((1.0 - weighted_error) / weighted_error).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub task: Task,
    pub trees: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

impl Forest {
    /// Member `i` draws its bootstrap and feature subsets from stream `(seed, i)`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], task: Task, params: ForestParams, seed: u64) -> Result<Self> {
        let n = x.len();
        let trees = (0..params.n_trees)
            .map(|i| {
                let mut rng = SplitMix64::fork(seed, i as u64);
                let sample: Vec<usize> =
                    if params.bootstrap { (0..n).map(|_| rng.below(n)).collect() } else { (0..n).collect() };
                grow_tree(x, y, &sample, task, params.tree, Some(rng))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { task, trees })
    }

    pub fn member_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// Mean of members (regression) or majority vote with ties going to 0.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let votes = self.member_predictions(x);
        match self.task {
            Task::Regress => votes.iter().sum::<f64>() / votes.len() as f64,
            Task::Classify => {
                let ones = votes.iter().filter(|&&v| v > 0.5).count();
                if 2 * ones > votes.len() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub learners: Vec<TreeNode>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each accepted round.
    pub errors: Vec<f64>,
    /// Per-round normalizer `Z_t`; the training exponential loss after round t
    /// is the running product.
    pub normalizers: Vec<f64>,
    /// Rounds abandoned because ten resamples all had error ≥ 0.5.
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaBoostParams {
    pub rounds: usize,
    pub base: TreeParams,
    pub max_retries: usize,
}

fn weighted_resample(weights: &[f64], rng: &mut SplitMix64) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cdf.push(acc);
    }
    (0..weights.len())
        .map(|_| {
            let u = rng.next_f64() * acc;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect()
}

impl AdaBoost {
    /// Discrete AdaBoost by weighted resampling; labels are 0/1.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: AdaBoostParams, seed: u64) -> Result<Self> {
        let n = x.len();
        let mut rng = SplitMix64::new(seed);
        let mut w = vec![1.0 / n as f64; n];
        let sign = |v: f64| if v > 0.5 { 1.0 } else { -1.0 };
        let mut model = AdaBoost {
            learners: Vec::new(),
            alphas: Vec::new(),
            errors: Vec::new(),
            normalizers: Vec::new(),
            stopped_early: false,
        };
        'rounds: for _ in 0..params.rounds {
            let mut attempt = 0;
            let (learner, preds, err) = loop {
                let sample = weighted_resample(&w, &mut rng);
                let learner = grow_tree(x, y, &sample, Task::Classify, params.base, None)?;
                let preds: Vec<f64> = x.iter().map(|r| learner.predict(r)).collect();
                let err: f64 = preds.iter().zip(y).zip(&w).filter(|((p, t), _)| p != t).map(|(_, wi)| wi).sum();
                if err < 0.5 {
                    break (learner, preds, err);
                }
                attempt += 1;
                if attempt >= params.max_retries {
                    model.stopped_early = true;
                    break 'rounds;
                }
            };
            let alpha = adaboost_stage_weight(err);
            let mut z = 0.0;
            for i in 0..n {
                w[i] *= (-alpha * sign(y[i]) * sign(preds[i])).exp();
                z += w[i];
            }
            for wi in &mut w {
                *wi /= z;
            }
            model.learners.push(learner);
            model.alphas.push(alpha);
            model.errors.push(err);
            model.normalizers.push(z);
            if err <= 0.0 {
                break;
            }
        }
        Ok(model)
    }

    /// `Σ α_t h_t(x)` with `h ∈ {−1, +1}`.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.learners
            .iter()
            .zip(&self.alphas)
            .map(|(h, a)| a * if h.predict(x) > 0.5 { 1.0 } else { -1.0 })
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.score(x) > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Training exponential loss after each round (running product of `Z_t`).
    pub fn loss_curve(&self) -> Vec<f64> {
        self.normalizers
            .iter()
            .scan(1.0, |acc, z| {
                *acc *= z;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy)]
pub struct GradientBoostingParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

impl GradientBoosting {
    /// Squared-loss boosting: each tree fits the current residuals.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: GradientBoostingParams) -> Result<Self> {
        let n = x.len();
        let init = y.iter().sum::<f64>() / n as f64;
        let mut fitted = vec![init; n];
        let all: Vec<usize> = (0..n).collect();
        let mut trees = Vec::with_capacity(params.rounds);
        for _ in 0..params.rounds {
            let residual: Vec<f64> = y.iter().zip(&fitted).map(|(t, f)| t - f).collect();
            let tree = grow_tree(x, &residual, &all, Task::Regress, params.tree, None)?;
            for (f, row) in fitted.iter_mut().zip(x) {
                *f += params.learning_rate * tree.predict(row);
            }
            trees.push(tree);
        }
        Ok(Self { init, learning_rate: params.learning_rate, trees })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_weights() {
        assert_eq!(adaboost_stage_weight(0.5), 0.0);
        assert!((adaboost_stage_weight(0.3) - 0.423_648_930_193_601_8).abs() < 1e-12);
        assert_eq!(adaboost_stage_weight(0.0), 0.5 * 1e6f64.ln());
        assert_eq!(adaboost_stage_weight(-1.0), max_stage_weight());
        assert_eq!(adaboost_stage_weight(1e-9), max_stage_weight());
    }

    #[test]
    fn resample_respects_zero_weights() {
        let mut rng = SplitMix64::new(3);
        let s = weighted_resample(&[0.0, 1.0, 0.0, 1.0], &mut rng);
        assert!(s.iter().all(|&i| i == 1 || i == 3));
    }

    #[test]
    fn gradient_boosting_reduces_error() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 4.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin()).collect();
        let params = GradientBoostingParams {
            rounds: 100,
            learning_rate: 0.1,
            tree: TreeParams { max_depth: 3, min_leaf: 2, max_features: None },
        };
        let gb = GradientBoosting::fit(&x, &y, params).unwrap();
        let mse: f64 = x.iter().zip(&y).map(|(r, t)| (gb.predict(r) - t).powi(2)).sum::<f64>() / 40.0;
        assert!(mse < 0.01, "mse {mse}");
    }
}
