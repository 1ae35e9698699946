//! The shallow learners behind one fit / predict contract.
//!
//! Inputs are always standardized with constants taken from the training
//! rows; the ANN and SVM regressors also standardize the target. Every model
//! keeps its [`ModelSpec`], seed included, so a fit can be repeated exactly.

pub mod ann;
pub mod ensemble;
pub mod knn;
pub mod linear;
pub mod logistic;
pub mod svm;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist;
use ann::{Ann, AnnParams};
use ensemble::{AdaBoost, AdaBoostParams, Forest, ForestParams, GradientBoosting, GradientBoostingParams};
use knn::Knn;
use linear::Linear;
use logistic::Logistic;
use svm::{Svm, SvmParams};
use tree::{grow_tree, TreeNode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Regress,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Regress => "regress",
        }
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify" => Ok(Task::Classify),
            "regress" => Ok(Task::Regress),
            _ => Err(Error::Domain(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Logistic,
    Knn,
    Cart,
    Bagging,
    Adaboost,
    RandomForest,
    Ann,
    Svm,
    MultivariateLinear,
}

impl Algo {
    pub const ALL: [Algo; 9] = [
        Algo::Logistic,
        Algo::Knn,
        Algo::Cart,
        Algo::Bagging,
        Algo::Adaboost,
        Algo::RandomForest,
        Algo::Ann,
        Algo::Svm,
        Algo::MultivariateLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Logistic => "logistic",
            Algo::Knn => "knn",
            Algo::Cart => "cart",
            Algo::Bagging => "bagging",
            Algo::Adaboost => "adaboost",
            Algo::RandomForest => "random_forest",
            Algo::Ann => "ann",
            Algo::Svm => "svm",
            Algo::MultivariateLinear => "multivariate_linear",
        }
    }

    /// Logistic and KNN only classify; the linear model only regresses.
    pub fn supports(self, task: Task) -> bool {
        match self {
            Algo::Logistic | Algo::Knn => task == Task::Classify,
            Algo::MultivariateLinear => task == Task::Regress,
            _ => true,
        }
    }

    /// Hyperparameter names accepted by this algorithm.
    pub fn hyperparameters(self) -> &'static [&'static str] {
        match self {
            Algo::Logistic => &["l2", "max_iter"],
            Algo::Knn => &["k"],
            Algo::Cart => &["max_depth", "min_leaf"],
            Algo::Bagging => &["n_trees", "max_depth", "min_leaf"],
            Algo::RandomForest => &["n_trees", "max_depth", "min_leaf", "max_features", "bootstrap"],
            Algo::Adaboost => &["rounds", "max_depth", "min_leaf", "learning_rate", "max_retries"],
            Algo::Ann => &["hidden", "learning_rate", "iterations"],
            Algo::Svm => &["c", "gamma", "epsilon", "tol", "max_sweeps"],
            Algo::MultivariateLinear => &["l2"],
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algo: Algo,
    pub task: Task,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(algo: Algo, task: Task, seed: u64) -> Result<Self> {
        if !algo.supports(task) {
            return Err(Error::Domain(format!("{algo} cannot {}", task.name())));
        }
        Ok(Self { algo, task, hyperparameters: BTreeMap::new(), seed })
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.algo.hyperparameters().contains(&name) {
            return Err(Error::Domain(format!("{} has no hyperparameter {name:?}", self.algo)));
        }
        if !value.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite")));
        }
        self.hyperparameters.insert(name.to_string(), value);
        Ok(())
    }

    /// `algo:task`, the identifier used in reports.
    pub fn id(&self) -> String {
        format!("{}:{}", self.algo, self.task.name())
    }

    fn real(&self, name: &str, default: f64) -> f64 {
        self.hyperparameters.get(name).copied().unwrap_or(default)
    }

    fn count(&self, name: &str, default: usize) -> Result<usize> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(&v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(Error::Domain(format!("{name} must be a non-negative integer, got {v}"))),
        }
    }

    fn positive(&self, name: &str, default: usize) -> Result<usize> {
        let v = self.count(name, default)?;
        if v == 0 {
            return Err(Error::Domain(format!("{name} must be at least 1")));
        }
        Ok(v)
    }

    fn tree_params(&self, depth: usize, leaf: usize) -> Result<TreeParams> {
        Ok(TreeParams {
            max_depth: self.count("max_depth", depth)?,
            min_leaf: self.positive("min_leaf", leaf)?,
            max_features: None,
        })
    }
}

/// Column means and standard deviations of the training rows. Constant
/// columns get a unit scale so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds = (0..d)
            .map(|j| {
                let v = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Affine target scaling `(y − mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let v = y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: if v > 0.0 { v.sqrt() } else { 1.0 } }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitted {
    Logistic(Logistic),
    Knn(Knn),
    Tree(TreeNode),
    Forest(Forest),
    AdaBoost(AdaBoost),
    Boosting(GradientBoosting),
    Ann(Ann),
    Svm(Svm),
    Linear(Linear),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub standardizer: Standardizer,
    pub target_scale: Option<TargetScale>,
    pub fitted: Fitted,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    standardizer: Standardizer,
    target_scale: Option<TargetScale>,
    fitted: Fitted,
}

fn check_inputs(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 10 {
        return Err(Error::InsufficientData(format!("{} rows; at least 10 needed", x.len())));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::Shape("rows have no features".into()));
    }
    for (i, r) in x.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Shape(format!("row {i} has {} features, expected {d}", r.len())));
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite input in row {i}")));
        }
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite target".into()));
    }
    if spec.task == Task::Classify {
        if !y.iter().all(|&v| v == 0.0 || v == 1.0) {
            return Err(Error::Domain("classification labels must be 0 or 1".into()));
        }
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if ones == 0 || ones == y.len() {
            return Err(Error::DegenerateTarget("only one class present".into()));
        }
    }
    Ok(())
}

/// Fits `spec` on raw (unstandardized) rows.
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<TrainedModel> {
    check_inputs(spec, x, y)?;
    let standardizer = Standardizer::fit(x);
    let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
    let d = xs[0].len();
    let task = spec.task;
    let seed = spec.seed;

    let target_scale = match (spec.algo, task) {
        (Algo::Ann | Algo::Svm, Task::Regress) => Some(TargetScale::fit(y)),
        _ => None,
    };
    let ys: Vec<f64> = match target_scale {
        Some(ts) => y.iter().map(|&t| ts.forward(t)).collect(),
        None => y.to_vec(),
    };

    let fitted = match spec.algo {
        Algo::Logistic => Fitted::Logistic(Logistic::fit(&xs, &ys, spec.real("l2", 1e-4), spec.positive("max_iter", 100)?)?),
        Algo::Knn => {
            let k = spec.positive("k", 5)?;
            if k > xs.len() {
                return Err(Error::InsufficientData(format!("k = {k} exceeds {} training rows", xs.len())));
            }
            Fitted::Knn(Knn { k, task, x: xs, y: ys })
        }
        Algo::Cart => {
            let all: Vec<usize> = (0..xs.len()).collect();
            Fitted::Tree(grow_tree(&xs, &ys, &all, task, spec.tree_params(8, 5)?, None)?)
        }
        Algo::Bagging | Algo::RandomForest => {
            let mut tree = spec.tree_params(8, 5)?;
            let mut bootstrap = true;
            if spec.algo == Algo::RandomForest {
                let default = match task {
                    Task::Classify => (d as f64).sqrt().ceil() as usize,
                    Task::Regress => d.div_ceil(3),
                };
                tree.max_features = Some(spec.positive("max_features", default)?.min(d));
                bootstrap = spec.real("bootstrap", 1.0) != 0.0;
            }
            let params = ForestParams { n_trees: spec.positive("n_trees", 100)?, tree, bootstrap };
            Fitted::Forest(Forest::fit(&xs, &ys, task, params, seed)?)
        }
        Algo::Adaboost => match task {
            Task::Classify => {
                let params = AdaBoostParams {
                    rounds: spec.positive("rounds", 200)?,
                    base: spec.tree_params(1, 1)?,
                    max_retries: spec.positive("max_retries", 10)?,
                };
                Fitted::AdaBoost(AdaBoost::fit(&xs, &ys, params, seed)?)
            }
            Task::Regress => {
                let params = GradientBoostingParams {
                    rounds: spec.positive("rounds", 200)?,
                    learning_rate: spec.real("learning_rate", 0.1),
                    tree: spec.tree_params(3, 1)?,
                };
                Fitted::Boosting(GradientBoosting::fit(&xs, &ys, params)?)
            }
        },
        Algo::Ann => {
            let params = AnnParams {
                hidden: spec.positive("hidden", 16)?,
                learning_rate: spec.real("learning_rate", 0.01),
                iterations: spec.count("iterations", 2000)?,
            };
            Fitted::Ann(Ann::fit(&xs, &ys, task, params, seed)?)
        }
        Algo::Svm => {
            let params = SvmParams {
                c: spec.real("c", 1.0),
                gamma: spec.real("gamma", 1.0 / d as f64),
                epsilon: spec.real("epsilon", 0.1),
                tol: spec.real("tol", 1e-3),
                max_sweeps: spec.positive("max_sweeps", 1000)?,
            };
            Fitted::Svm(Svm::fit(&xs, &ys, task, params)?)
        }
        Algo::MultivariateLinear => Fitted::Linear(Linear::fit(&xs, &ys, spec.real("l2", 0.0))?),
    };
    Ok(TrainedModel { spec: spec.clone(), standardizer, target_scale, fitted })
}

impl TrainedModel {
    pub fn width(&self) -> usize {
        self.standardizer.means.len()
    }

    fn prepare(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.width() {
            return Err(Error::Shape(format!("input has {} features, model expects {}", row.len(), self.width())));
        }
        Ok(self.standardizer.apply(row))
    }

    fn unscale(&self, v: f64) -> f64 {
        match self.target_scale {
            Some(ts) => ts.inverse(v),
            None => v,
        }
    }

    /// Label in {0, 1} or a value in target units.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let z = self.prepare(row)?;
        let p = match &self.fitted {
            Fitted::Logistic(m) => m.predict(&z),
            Fitted::Knn(m) => m.predict(&z),
            Fitted::Tree(m) => m.predict(&z),
            Fitted::Forest(m) => m.predict(&z),
            Fitted::AdaBoost(m) => m.predict(&z),
            Fitted::Boosting(m) => m.predict(&z),
            Fitted::Ann(m) => self.unscale(m.predict(&z)),
            Fitted::Svm(m) => self.unscale(m.predict(&z)),
            Fitted::Linear(m) => m.predict(&z),
        };
        if !p.is_finite() {
            return Err(Error::Numeric(format!("{} produced a non-finite prediction", self.spec.id())));
        }
        Ok(p)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// The continuous quantity the label is thresholded from (probability,
    /// neighbour vote share, margin, boosted score) or the regression value.
    pub fn decision_value(&self, row: &[f64]) -> Result<f64> {
        let z = self.prepare(row)?;
        Ok(match &self.fitted {
            Fitted::Logistic(m) => m.probability(&z),
            Fitted::Knn(m) => m.score(&z),
            Fitted::Ann(m) => self.unscale(m.raw_output(&z)),
            Fitted::Svm(m) => self.unscale(m.decision(&z)),
            Fitted::AdaBoost(m) => m.score(&z),
            Fitted::Forest(m) if self.spec.task == Task::Classify => {
                let v = m.member_predictions(&z);
                v.iter().sum::<f64>() / v.len() as f64
            }
            _ => self.predict_row(row)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let payload = Payload {
            standardizer: self.standardizer.clone(),
            target_scale: self.target_scale,
            fitted: self.fitted.clone(),
        };
        persist::to_string("shallow", &self.spec, &payload)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (spec, p): (ModelSpec, Payload) = persist::from_str("shallow", text)?;
        Ok(Self { spec, standardizer: p.standardizer, target_scale: p.target_scale, fitted: p.fitted })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Every valid (algorithm, task) pair: eight classifiers then seven regressors.
pub fn all_specs(seed: u64) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for task in [Task::Classify, Task::Regress] {
        for algo in Algo::ALL {
            if algo.supports(task) {
                out.push(ModelSpec { algo, task, hyperparameters: BTreeMap::new(), seed });
            }
        }
    }
    out
}
