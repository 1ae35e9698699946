//! Self-organizing fuzzy neural network with ellipsoidal basis functions.
//!
//! Layers: inputs, per-neuron ellipsoidal membership (the product of 1-D
//! Gaussians collapses to one exponent), rule firing, normalization, and a
//! weighted sum of per-neuron linear consequents.
//!
//! Structure learning, scanning training rows in date order:
//! * an error `|y − ŷ| > δ` adds a neuron centred on the row;
//! * otherwise, a row no neuron covers (`max φ < φ_min`) widens the nearest
//!   neuron just enough to cover it;
//! * consequents are refitted jointly by ridge least squares after each
//!   epoch, and rarely-firing or duplicate neurons are pruned every few epochs.
//!
//! The network forecasts `close_norm` from three lags of the four moods and
//! three lags of `close_norm` itself.

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::features::FeatureFrame;
use crate::linalg::{ridge, Matrix};
use crate::metrics::{mape, RegressionReport};
use crate::models::Standardizer;
use crate::scalar::{count, Scalar};
use crate::sentiment::MoodSeries;

/// Firing below this everywhere triggers the nearest-neuron fallback.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EllipsoidalNeuron<T> {
    pub center: Vec<T>,
    pub widths: Vec<T>,
}

/// Linear output `w·x + b` of one rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Consequent<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> Consequent<T> {
    pub fn eval(&self, x: &[T]) -> T {
        self.weights.iter().zip(x).fold(self.bias, |acc, (w, v)| acc + *w * *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RuleBase<T> {
    pub neurons: Vec<EllipsoidalNeuron<T>>,
    pub consequents: Vec<Consequent<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofnnConfig {
    /// Error threshold δ, in target units.
    pub delta: f64,
    pub phi_min: f64,
    pub sigma0: f64,
    pub sigma_min: f64,
    /// New widths are κ times the distance to the nearest existing center.
    pub kappa: f64,
    pub prune_threshold: f64,
    pub prune_every: usize,
    pub max_neurons: usize,
    pub epochs: usize,
    pub ridge: f64,
    /// Training stops once an epoch improves MAPE by less than this.
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for SofnnConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            phi_min: (-2.0f64).exp(),
            sigma0: 1.0,
            sigma_min: 1e-3,
            kappa: 0.5,
            prune_threshold: 1e-3,
            prune_every: 5,
            max_neurons: 50,
            epochs: 30,
            ridge: 1e-6,
            min_improvement: 0.01,
            seed: 0,
        }
    }
}

impl SofnnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Domain("delta must be positive".into()));
        }
        if !(self.phi_min >= 0.0 && self.phi_min < 1.0) {
            return Err(Error::Domain("phi_min must lie in [0, 1)".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma_min > 0.0) {
            return Err(Error::Domain("widths must be positive".into()));
        }
        if self.max_neurons == 0 || self.epochs == 0 {
            return Err(Error::Domain("max_neurons and epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// `−Σ (x_j − c_j)² / (2σ_j²)`.
fn log_membership<T: Scalar>(n: &EllipsoidalNeuron<T>, x: &[T]) -> T {
    let two = T::of(2.0);
    -n.center.iter().zip(&n.widths).zip(x).fold(T::zero(), |acc, ((c, s), v)| {
        let d = (*v - *c) / *s;
        acc + d * d / two
    })
}

pub fn membership<T: Scalar>(neuron: &EllipsoidalNeuron<T>, x: &[T]) -> Result<T> {
    check_len(neuron.center.len(), x.len())?;
    Ok(log_membership(neuron, x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Ok,
    GrowError,
    GrowCoverage,
}

impl<T: Scalar> RuleBase<T> {
    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.neurons.first().map_or(0, |n| n.center.len())
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if self.neurons.is_empty() {
            return Err(Error::Domain("rule base has no neurons".into()));
        }
        check_len(self.neurons.len(), self.consequents.len())?;
        check_len(self.dim(), x.len())
    }

    pub fn firings(&self, x: &[T]) -> Vec<T> {
        self.neurons.iter().map(|n| log_membership(n, x).exp()).collect()
    }

    fn nearest(&self, x: &[T]) -> usize {
        let logs: Vec<T> = self.neurons.iter().map(|n| log_membership(n, x)).collect();
        (0..logs.len()).fold(0, |best, i| if logs[i] > logs[best] { i } else { best })
    }

    /// Firing strengths divided by their sum. When every firing underflows,
    /// all weight goes to the nearest neuron (in width-scaled distance).
    pub fn normalized_firing(&self, x: &[T]) -> Vec<T> {
        let phi = self.firings(x);
        let total = phi.iter().fold(T::zero(), |a, v| a + *v);
        let max = phi.iter().fold(T::zero(), |a, v| a.max(*v));
        if max < T::of(UNDERFLOW) || !(total > T::zero()) {
            let mut w = vec![T::zero(); phi.len()];
            w[self.nearest(x)] = T::one();
            return w;
        }
        phi.into_iter().map(|p| p / total).collect()
    }

    pub fn consequent_outputs(&self, x: &[T]) -> Vec<T> {
        self.consequents.iter().map(|c| c.eval(x)).collect()
    }

    /// `Σ φ_i (w_i·x + b_i) / Σ φ_i`.
    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        let w = self.normalized_firing(x);
        Ok(w.iter().zip(&self.consequents).fold(T::zero(), |acc, (wi, c)| acc + *wi * c.eval(x)))
    }
}

/// `sofnn_forward`.
pub fn sofnn_forward<T: Scalar>(rb: &RuleBase<T>, x: &[T]) -> Result<T> {
    rb.forward(x)
}

/// Error growth takes precedence over coverage growth.
pub fn criterion_check<T: Scalar>(rb: &RuleBase<T>, x: &[T], y: T, config: &SofnnConfig) -> Result<Criterion> {
    let y_hat = rb.forward(x)?;
    if (y - y_hat).abs() > T::of(config.delta) {
        return Ok(Criterion::GrowError);
    }
    let max = rb.firings(x).into_iter().fold(T::zero(), |a, v| a.max(v));
    if max < T::of(config.phi_min) {
        return Ok(Criterion::GrowCoverage);
    }
    Ok(Criterion::Ok)
}

/// Adds a neuron centred at `x` with consequent `y` (zero weights). Returns
/// `false`, leaving the rule base untouched, when already at capacity.
pub fn add_neuron<T: Scalar>(rb: &mut RuleBase<T>, x: &[T], y: T, config: &SofnnConfig) -> bool {
    if rb.len() >= config.max_neurons {
        return false;
    }
    let sigma_min = T::of(config.sigma_min);
    let width = if rb.is_empty() {
        T::of(config.sigma0)
    } else {
        let dist = rb
            .neurons
            .iter()
            .map(|n| n.center.iter().zip(x).fold(T::zero(), |a, (c, v)| a + (*v - *c) * (*v - *c)).sqrt())
            .fold(T::infinity(), |a, d| a.min(d));
        (T::of(config.kappa) * dist).max(sigma_min)
    };
    rb.neurons.push(EllipsoidalNeuron { center: x.to_vec(), widths: vec![width; x.len()] });
    rb.consequents.push(Consequent { weights: vec![T::zero(); x.len()], bias: y });
    true
}

/// Scales the nearest neuron's widths so its firing at `x` reaches `φ_min`.
pub fn widen_nearest<T: Scalar>(rb: &mut RuleBase<T>, x: &[T], config: &SofnnConfig) {
    if rb.is_empty() || config.phi_min <= 0.0 {
        return;
    }
    let i = rb.nearest(x);
    let q = -log_membership(&rb.neurons[i], x);
    let target = T::of(-config.phi_min.ln());
    if q > target {
        let s = (q / target).sqrt() * T::of(1.0 + 1e-9);
        rb.neurons[i].widths.iter_mut().for_each(|w| *w = *w * s);
    }
}

/// Jointly refits every consequent by ridge least squares on the design
/// `[ψ_i(x)·x, ψ_i(x)]_i`, with optional per-row weights.
pub fn fit_consequents<T: Scalar>(rb: &mut RuleBase<T>, x: &[Vec<T>], y: &[T], weights: Option<&[T]>, lambda: T) -> Result<()> {
    check_len(x.len(), y.len())?;
    if x.is_empty() {
        return Err(Error::InsufficientData("no rows to fit consequents".into()));
    }
    let d = rb.dim();
    let k = rb.len();
    let width = k * (d + 1);
    let mut data = Vec::with_capacity(x.len() * width);
    for row in x {
        check_len(row.len(), d)?;
        for psi in rb.normalized_firing(row) {
            data.extend(row.iter().map(|v| psi * *v));
            data.push(psi);
        }
    }
    let a = Matrix::from_vec(x.len(), width, data)?;
    let beta = ridge(&a, y, weights, lambda)?;
    for (i, c) in rb.consequents.iter_mut().enumerate() {
        let block = &beta[i * (d + 1)..(i + 1) * (d + 1)];
        c.weights = block[..d].to_vec();
        c.bias = block[d];
    }
    Ok(())
}

/// Removes duplicate neurons and those whose mean normalized firing over the
/// rows is below the threshold, then refits. The last neuron always stays.
/// Returns how many were removed.
pub fn prune<T: Scalar>(rb: &mut RuleBase<T>, x: &[Vec<T>], y: &[T], config: &SofnnConfig) -> Result<usize> {
    if rb.len() < 2 || x.is_empty() {
        return Ok(0);
    }
    let k = rb.len();
    let mut mean = vec![T::zero(); k];
    for row in x {
        for (m, p) in mean.iter_mut().zip(rb.normalized_firing(row)) {
            *m = *m + p;
        }
    }
    let n = count::<T>(x.len());
    let mut keep = vec![true; k];
    for i in 0..k {
        let dup = (0..i).any(|j| keep[j] && rb.neurons[j] == rb.neurons[i]);
        if dup || mean[i] / n < T::of(config.prune_threshold) {
            keep[i] = false;
        }
    }
    if !keep.iter().any(|&b| b) {
        let best = (0..k).fold(0, |b, i| if mean[i] > mean[b] { i } else { b });
        keep[best] = true;
    }
    let removed = keep.iter().filter(|&&b| !b).count();
    if removed > 0 {
        let mut it = keep.iter();
        rb.neurons.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        rb.consequents.retain(|_| *it.next().unwrap());
        fit_consequents(rb, x, y, None, T::of(config.ridge))?;
    }
    Ok(removed)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs_run: usize,
    pub neurons_per_epoch: Vec<usize>,
    pub mape_per_epoch: Vec<f64>,
    pub grown_error: usize,
    pub widened: usize,
    pub refused: usize,
    pub pruned: usize,
}

fn training_mape<T: Scalar>(rb: &RuleBase<T>, x: &[Vec<T>], y: &[T]) -> Result<f64> {
    let pred = x.iter().map(|r| rb.forward(r)).collect::<Result<Vec<T>>>()?;
    Ok(mape(y, &pred)?.value.map_or(f64::INFINITY, |v| v.to_f64_lossy()))
}

/// Structure and consequent learning on already-prepared inputs.
pub fn train_rulebase<T: Scalar>(config: &SofnnConfig, x: &[Vec<T>], y: &[T]) -> Result<(RuleBase<T>, TrainLog)> {
    config.validate()?;
    check_len(x.len(), y.len())?;
    if x.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    let d = x[0].len();
    let lambda = T::of(config.ridge);
    let mut rb = RuleBase { neurons: Vec::new(), consequents: Vec::new() };
    add_neuron(&mut rb, &vec![T::zero(); d], T::zero(), config);
    fit_consequents(&mut rb, x, y, None, lambda)?;
    let mut log = TrainLog::default();
    let mut prev = training_mape(&rb, x, y)?;
    for epoch in 1..=config.epochs {
        for (row, &target) in x.iter().zip(y) {
            match criterion_check(&rb, row, target, config)? {
                Criterion::Ok => {}
                Criterion::GrowError => {
                    if add_neuron(&mut rb, row, target, config) {
                        log.grown_error += 1;
                    } else {
                        log.refused += 1;
                    }
                }
                Criterion::GrowCoverage => {
                    widen_nearest(&mut rb, row, config);
                    log.widened += 1;
                }
            }
        }
        fit_consequents(&mut rb, x, y, None, lambda)?;
        if config.prune_every > 0 && epoch % config.prune_every == 0 {
            log.pruned += prune(&mut rb, x, y, config)?;
        }
        let m = training_mape(&rb, x, y)?;
        log.epochs_run = epoch;
        log.neurons_per_epoch.push(rb.len());
        log.mape_per_epoch.push(m);
        if prev - m < config.min_improvement {
            break;
        }
        prev = m;
    }
    Ok((rb, log))
}

pub const SOFNN_LAGS: usize = 3;
pub const SOFNN_INPUT_DIM: usize = SOFNN_LAGS * 4 + SOFNN_LAGS;

/// Raw input for target day `t`: moods at lags 1..3 (four values each) then
/// `close_norm` at lags 1..3. `mood_day(k)` and `close(k)` supply lag `k`.
fn raw_input(mood_at: impl Fn(usize) -> [f64; 4], close_at: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(SOFNN_INPUT_DIM);
    for k in 1..=SOFNN_LAGS {
        v.extend(mood_at(k));
    }
    for k in 1..=SOFNN_LAGS {
        v.push(close_at(k));
    }
    v
}

/// Unstandardized input for day `t` using observed history only.
pub fn observed_input(frame: &FeatureFrame, moods: &MoodSeries, t: usize) -> Result<Vec<f64>> {
    if t < SOFNN_LAGS {
        return Err(Error::InsufficientData(format!("day {} lacks {SOFNN_LAGS} lags", frame.rows()[t].date)));
    }
    let rows = frame.rows();
    Ok(raw_input(|k| moods.moods[t - k].as_array(), |k| rows[t - k].close_norm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SofnnModel {
    pub config: SofnnConfig,
    pub inputs: Standardizer,
    pub rulebase: RuleBase<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SofnnRun {
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub report: RegressionReport<f64>,
}

/// Trains on every day of `range` that has three days of history.
pub fn train_sofnn(config: &SofnnConfig, moods: &MoodSeries, frame: &FeatureFrame, range: Range<usize>) -> Result<(SofnnModel, TrainLog)> {
    moods.check_aligned(frame)?;
    let start = range.start.max(SOFNN_LAGS);
    let raw: Vec<Vec<f64>> = (start..range.end).map(|t| observed_input(frame, moods, t)).collect::<Result<_>>()?;
    if raw.len() < 30 {
        return Err(Error::InsufficientData(format!("{} usable rows; at least 30 needed", raw.len())));
    }
    let y: Vec<f64> = (start..range.end).map(|t| frame.rows()[t].close_norm).collect();
    let inputs = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| inputs.apply(r)).collect();
    let (rulebase, log) = train_rulebase(config, &x, &y)?;
    Ok((SofnnModel { config: *config, inputs, rulebase }, log))
}

impl SofnnModel {
    pub fn predict_raw(&self, raw: &[f64]) -> Result<f64> {
        self.rulebase.forward(&self.inputs.apply(raw))
    }

    /// Five recursive one-day forecasts after `anchor`. Each forecast becomes
    /// the next day's lag-1 close; moods after the anchor repeat the anchor's.
    pub fn predict_week(&self, frame: &FeatureFrame, moods: &MoodSeries, anchor: usize) -> Result<Vec<f64>> {
        moods.check_aligned(frame)?;
        if anchor + 1 < SOFNN_LAGS {
            return Err(Error::InsufficientData("history shorter than three days".into()));
        }
        let rows = frame.rows();
        let mut preds: Vec<f64> = Vec::with_capacity(5);
        for h in 1..=5 {
            let t = anchor + h;
            let raw = raw_input(
                |k| moods.moods[(t - k).min(anchor)].as_array(),
                |k| if t - k > anchor { preds[t - k - anchor - 1] } else { rows[t - k].close_norm },
            );
            preds.push(self.predict_raw(&raw)?);
        }
        Ok(preds)
    }

    /// Weekly recursive forecasts over `range`.
    pub fn evaluate(&self, frame: &FeatureFrame, moods: &MoodSeries, range: Range<usize>) -> Result<SofnnRun> {
        let (mut dates, mut actual, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
        for w in crate::harness::weekly_windows(range) {
            let Some(anchor) = w.anchor.filter(|&a| a + 1 >= SOFNN_LAGS) else {
                continue;
            };
            let week = self.predict_week(frame, moods, anchor)?;
            for (t, p) in w.targets.clone().zip(week) {
                dates.push(frame.rows()[t].date);
                actual.push(frame.rows()[t].close_norm);
                predicted.push(p);
            }
        }
        if actual.is_empty() {
            return Err(Error::EmptyRange("no forecastable window".into()));
        }
        let report = RegressionReport::from_values(&actual, &predicted)?;
        Ok(SofnnRun { dates, actual, predicted, report })
    }
}
