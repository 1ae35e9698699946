//! A single-layer LSTM regressor written out by hand: forward pass, full
//! backpropagation through time, MAE loss and Adam.
//!
//! Parameters live in one flat vector laid out as
//! `W (4H×D) | U (4H×H) | b (4H) | V (5×H) | c (5)`, gate blocks ordered
//! input, forget, output, candidate.
//!
//! Sequences fed to the network have `D = 10` columns: the nine variables in
//! canonical order plus a flag that is 1 on target-day slots.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::features::{FeatureFrame, N_VARIABLES};
use crate::harness::{ForecastWindow, Forecaster, Mode, HORIZON};
use crate::models::{Standardizer, TargetScale, Task};
use crate::persist;
use crate::rng::SplitMix64;
use crate::scalar::{count, Scalar};

pub const INPUT_WIDTH: usize = N_VARIABLES + 1;
/// Column of `close_norm` within a sequence step.
const CLOSE_COLUMN: usize = 6;

fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LstmParams<T> {
    pub input: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub flat: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![T::zero(); hidden], c: vec![T::zero(); hidden] }
    }
}

impl<T: Scalar> LstmParams<T> {
    pub fn len_for(input: usize, hidden: usize, outputs: usize) -> usize {
        4 * hidden * (input + hidden + 1) + outputs * (hidden + 1)
    }

    pub fn zeros(input: usize, hidden: usize, outputs: usize) -> Self {
        Self { input, hidden, outputs, flat: vec![T::zero(); Self::len_for(input, hidden, outputs)] }
    }

    /// Uniform `±1/√H` weights, zero biases except the forget gate at 1.
    pub fn init(input: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input, hidden, outputs);
        let mut rng = SplitMix64::new(seed);
        let a = 1.0 / (hidden as f64).sqrt();
        for v in p.flat.iter_mut() {
            *v = T::of(rng.uniform(-a, a));
        }
        let b = p.b_range();
        for (k, v) in p.flat[b].iter_mut().enumerate() {
            *v = if k / hidden == 1 { T::one() } else { T::zero() };
        }
        let c = p.c_range();
        p.flat[c].iter_mut().for_each(|v| *v = T::zero());
        p
    }

    pub fn w_range(&self) -> Range<usize> {
        0..4 * self.hidden * self.input
    }

    pub fn u_range(&self) -> Range<usize> {
        let s = self.w_range().end;
        s..s + 4 * self.hidden * self.hidden
    }

    pub fn b_range(&self) -> Range<usize> {
        let s = self.u_range().end;
        s..s + 4 * self.hidden
    }

    pub fn v_range(&self) -> Range<usize> {
        let s = self.b_range().end;
        s..s + self.outputs * self.hidden
    }

    pub fn c_range(&self) -> Range<usize> {
        let s = self.v_range().end;
        s..s + self.outputs
    }

    fn check(&self) -> Result<()> {
        if self.flat.len() != Self::len_for(self.input, self.hidden, self.outputs) {
            return Err(Error::Shape(format!("parameter vector has {} entries", self.flat.len())));
        }
        Ok(())
    }

    /// Gate pre-activations `W x + U h + b`.
    fn preactivations(&self, x: &[T], h: &[T]) -> Vec<T> {
        let (d, hd) = (self.input, self.hidden);
        let w = &self.flat[self.w_range()];
        let u = &self.flat[self.u_range()];
        let b = &self.flat[self.b_range()];
        (0..4 * hd)
            .map(|r| {
                let mut z = b[r];
                for (wv, xv) in w[r * d..(r + 1) * d].iter().zip(x) {
                    z = z + *wv * *xv;
                }
                for (uv, hv) in u[r * hd..(r + 1) * hd].iter().zip(h) {
                    z = z + *uv * *hv;
                }
                z
            })
            .collect()
    }

    fn head(&self, h: &[T]) -> Vec<T> {
        let v = &self.flat[self.v_range()];
        let c = &self.flat[self.c_range()];
        (0..self.outputs)
            .map(|k| v[k * self.hidden..(k + 1) * self.hidden].iter().zip(h).fold(c[k], |acc, (a, b)| acc + *a * *b))
            .collect()
    }
}

struct StepCache<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    o: Vec<T>,
    g: Vec<T>,
    tanh_c: Vec<T>,
}

fn cell_cached<T: Scalar>(p: &LstmParams<T>, x: &[T], state: &LstmState<T>) -> (LstmState<T>, StepCache<T>) {
    let hd = p.hidden;
    let z = p.preactivations(x, &state.h);
    let i: Vec<T> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<T> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
    let o: Vec<T> = z[2 * hd..3 * hd].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<T> = z[3 * hd..].iter().map(|v| v.tanh()).collect();
    let c: Vec<T> = (0..hd).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<T> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    let cache = StepCache { x: x.to_vec(), h_prev: state.h.clone(), c_prev: state.c.clone(), i, f, o, g, tanh_c };
    (LstmState { h, c }, cache)
}

/// One cell application: `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
pub fn lstm_cell<T: Scalar>(params: &LstmParams<T>, x: &[T], state: &LstmState<T>) -> Result<LstmState<T>> {
    params.check()?;
    check_len(x.len(), params.input)?;
    check_len(state.h.len(), params.hidden)?;
    check_len(state.c.len(), params.hidden)?;
    Ok(cell_cached(params, x, state).0)
}

fn run<T: Scalar>(params: &LstmParams<T>, window: &[Vec<T>]) -> Result<(Vec<T>, Vec<StepCache<T>>, Vec<T>)> {
    params.check()?;
    if window.is_empty() {
        return Err(Error::Shape("empty input window".into()));
    }
    let mut state = LstmState::zeros(params.hidden);
    let mut caches = Vec::with_capacity(window.len());
    for (step, x) in window.iter().enumerate() {
        check_len(x.len(), params.input)?;
        let (next, cache) = cell_cached(params, x, &state);
        if !next.c.iter().chain(&next.h).all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite LSTM state at step {step}")));
        }
        caches.push(cache);
        state = next;
    }
    let out = params.head(&state.h);
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite LSTM output".into()));
    }
    Ok((out, caches, state.h))
}

/// Unrolls the cell over the window and applies the dense head to the final
/// hidden state. Outputs are in standardized target units.
pub fn forward_sequence<T: Scalar>(params: &LstmParams<T>, window: &[Vec<T>]) -> Result<Vec<T>> {
    Ok(run(params, window)?.0)
}

/// Mean absolute error.
pub fn mae_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    check_len(pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty loss input".into()));
    }
    Ok(pred.iter().zip(target).fold(T::zero(), |acc, (p, t)| acc + (*p - *t).abs()) / count(pred.len()))
}

fn mae_subgradient<T: Scalar>(p: T, t: T, n: usize) -> T {
    let d = p - t;
    if d > T::zero() {
        T::one() / count(n)
    } else if d < T::zero() {
        -T::one() / count(n)
    } else {
        T::zero()
    }
}

/// MAE loss on one window and its gradient by backpropagation through time.
pub fn loss_and_grad<T: Scalar>(params: &LstmParams<T>, window: &[Vec<T>], target: &[T]) -> Result<(T, Vec<T>)> {
    let (out, caches, h_last) = run(params, window)?;
    check_len(out.len(), target.len())?;
    let loss = mae_loss(&out, target)?;
    let (hd, d) = (params.hidden, params.input);
    let mut grad = vec![T::zero(); params.flat.len()];
    let (wr, ur, br, vr, cr) = (params.w_range(), params.u_range(), params.b_range(), params.v_range(), params.c_range());
    let v = &params.flat[vr.clone()];
    let u = &params.flat[ur.clone()];

    let mut dh = vec![T::zero(); hd];
    for k in 0..params.outputs {
        let dy = mae_subgradient(out[k], target[k], out.len());
        grad[cr.start + k] = dy;
        for j in 0..hd {
            grad[vr.start + k * hd + j] = dy * h_last[j];
            dh[j] = dh[j] + dy * v[k * hd + j];
        }
    }
    let mut dc = vec![T::zero(); hd];
    let mut dz = vec![T::zero(); 4 * hd];
    for s in caches.iter().rev() {
        for j in 0..hd {
            let dct = dc[j] + dh[j] * s.o[j] * (T::one() - s.tanh_c[j] * s.tanh_c[j]);
            let d_o = dh[j] * s.tanh_c[j];
            let di = dct * s.g[j];
            let dg = dct * s.i[j];
            let df = dct * s.c_prev[j];
            dc[j] = dct * s.f[j];
            dz[j] = di * s.i[j] * (T::one() - s.i[j]);
            dz[hd + j] = df * s.f[j] * (T::one() - s.f[j]);
            dz[2 * hd + j] = d_o * s.o[j] * (T::one() - s.o[j]);
            dz[3 * hd + j] = dg * (T::one() - s.g[j] * s.g[j]);
        }
        for r in 0..4 * hd {
            let z = dz[r];
            if z == T::zero() {
                continue;
            }
            for (c, xv) in s.x.iter().enumerate() {
                grad[wr.start + r * d + c] = grad[wr.start + r * d + c] + z * *xv;
            }
            for (c, hv) in s.h_prev.iter().enumerate() {
                grad[ur.start + r * hd + c] = grad[ur.start + r * hd + c] + z * *hv;
            }
            grad[br.start + r] = grad[br.start + r] + z;
        }
        for j in 0..hd {
            dh[j] = (0..4 * hd).fold(T::zero(), |acc, r| acc + u[r * hd + j] * dz[r]);
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seq_len: usize,
    pub hidden: usize,
    /// Global gradient-norm clip; each Adam update is also capped at
    /// `learning_rate * clip` in norm.
    pub clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 80,
            batch_size: 60,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seq_len: 10,
            hidden: 32,
            clip: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Domain("epochs, batch size and hidden size must be at least 1".into()));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::Domain("Adam betas must lie in (0, 1)".into()));
        }
        if self.seq_len < 2 * HORIZON {
            return Err(Error::Domain(format!("sequence length must be at least {}", 2 * HORIZON)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Domain("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![T::zero(); n], v: vec![T::zero(); n], t: 0 }
    }
}

/// Bias-corrected Adam update in place; returns the norm of the applied step.
/// `max_update_norm` rescales the step when it would exceed that norm.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    config: &TrainConfig,
    max_update_norm: Option<T>,
) -> Result<T> {
    check_len(params.len(), grads.len())?;
    check_len(params.len(), state.m.len())?;
    if let Some(k) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at coordinate {k}")));
    }
    state.t += 1;
    let (b1, b2) = (T::of(config.beta1), T::of(config.beta2));
    let lr = T::of(config.learning_rate);
    let eps = T::of(config.epsilon);
    let c1 = T::one() - b1.powi(state.t as i32);
    let c2 = T::one() - b2.powi(state.t as i32);
    let mut step = vec![T::zero(); params.len()];
    let mut norm_sq = T::zero();
    for k in 0..params.len() {
        state.m[k] = b1 * state.m[k] + (T::one() - b1) * grads[k];
        state.v[k] = b2 * state.v[k] + (T::one() - b2) * grads[k] * grads[k];
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        step[k] = lr * m_hat / (v_hat.sqrt() + eps);
        norm_sq = norm_sq + step[k] * step[k];
    }
    let mut norm = norm_sq.sqrt();
    let scale = match max_update_norm {
        Some(cap) if norm > cap => cap / norm,
        _ => T::one(),
    };
    for (p, s) in params.iter_mut().zip(&step) {
        *p = *p - scale * *s;
    }
    norm = norm * scale;
    Ok(norm)
}

fn clip_norm<T: Scalar>(g: &mut [T], clip: T) {
    let norm = g.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
    if norm > clip {
        let s = clip / norm;
        g.iter_mut().for_each(|v| *v = *v * s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compares analytic gradients with central differences (step 1e-5) on up to
/// `samples` random coordinates. Coordinates whose perturbation moves any
/// output across an MAE kink (|p − t| < 1e-8 on either side) are skipped.
pub fn grad_check(params: &LstmParams<f64>, window: &[Vec<f64>], target: &[f64], samples: usize, seed: u64) -> Result<GradCheck> {
    let (_, grad) = loss_and_grad(params, window, target)?;
    let n = params.flat.len();
    let mut rng = SplitMix64::new(seed);
    let coords = rng.sample_indices(n, samples.min(n));
    let h = 1e-5;
    let near_kink = |out: &[f64]| out.iter().zip(target).any(|(p, t)| (p - t).abs() < 1e-8);
    let mut result = GradCheck { max_relative_error: 0.0, checked: 0, skipped: 0 };
    if near_kink(&forward_sequence(params, window)?) {
        result.skipped = coords.len();
        return Ok(result);
    }
    for k in coords {
        let mut plus = params.clone();
        plus.flat[k] += h;
        let mut minus = params.clone();
        minus.flat[k] -= h;
        let (op, om) = (forward_sequence(&plus, window)?, forward_sequence(&minus, window)?);
        let crosses = op.iter().zip(&om).zip(target).any(|((a, b), t)| (a - t).signum() != (b - t).signum());
        if crosses || near_kink(&op) || near_kink(&om) {
            result.skipped += 1;
            continue;
        }
        let fd = (mae_loss(&op, target)? - mae_loss(&om, target)?) / (2.0 * h);
        let denom = fd.abs().max(grad[k].abs()).max(1e-8);
        result.max_relative_error = result.max_relative_error.max((fd - grad[k]).abs() / denom);
        result.checked += 1;
    }
    Ok(result)
}

/// A trained network plus the scaling learned from its training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub config: TrainConfig,
    pub mode: Mode,
    pub params: LstmParams<f64>,
    pub inputs: Standardizer,
    pub target: TargetScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLstm {
    pub model: LstmModel,
    pub loss_curve: Vec<f64>,
    /// Largest Adam step norm applied during training.
    pub max_update_norm: f64,
}

impl LstmModel {
    /// Network input for a window anchored at `anchor` whose targets start at
    /// `anchor + 1`. Target slots beyond the frame end are zero.
    pub fn sequence(&self, frame: &FeatureFrame, anchor: usize) -> Result<Vec<Vec<f64>>> {
        build_sequence(frame, &self.inputs, self.mode, self.config.seq_len, anchor)
    }

    pub fn forecast(&self, frame: &FeatureFrame, anchor: usize) -> Result<Vec<f64>> {
        let out = forward_sequence(&self.params, &self.sequence(frame, anchor)?)?;
        Ok(out.into_iter().map(|z| self.target.inverse(z)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        persist::to_string("lstm", &self.config, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(persist::from_str::<TrainConfig, LstmModel>("lstm", text)?.1)
    }
}

fn history_len(mode: Mode, seq_len: usize) -> usize {
    match mode {
        Mode::Lagged => seq_len,
        Mode::Contemporaneous => seq_len - HORIZON,
    }
}

fn build_sequence(frame: &FeatureFrame, scale: &Standardizer, mode: Mode, seq_len: usize, anchor: usize) -> Result<Vec<Vec<f64>>> {
    let rows = frame.rows();
    let hist = history_len(mode, seq_len);
    if anchor + 1 < hist {
        return Err(Error::InsufficientData(format!("anchor {} has fewer than {hist} days of history", rows[anchor].date)));
    }
    let mut seq = Vec::with_capacity(seq_len);
    for k in (0..hist).rev() {
        let mut step = scale.apply(&rows[anchor - k].variables());
        step.push(0.0);
        seq.push(step);
    }
    if mode == Mode::Contemporaneous {
        for h in 1..=HORIZON {
            let t = anchor + h;
            let step = if t < rows.len() {
                let mut s = scale.apply(&rows[t].variables());
                s[CLOSE_COLUMN] = 0.0;
                s.push(1.0);
                s
            } else {
                vec![0.0; INPUT_WIDTH]
            };
            seq.push(step);
        }
    }
    if !seq.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::Numeric(format!("undefined input near {}", rows[anchor].date)));
    }
    Ok(seq)
}

/// Trains on every anchor in `range` whose history and five targets all lie
/// inside the range.
pub fn train_lstm(config: &TrainConfig, frame: &FeatureFrame, range: Range<usize>, mode: Mode) -> Result<TrainedLstm> {
    config.validate()?;
    let rows = &frame.rows()[range.clone()];
    if rows.is_empty() {
        return Err(Error::InsufficientData("empty training range".into()));
    }
    let vars: Vec<Vec<f64>> = rows.iter().map(|r| r.variables().to_vec()).collect();
    let inputs = Standardizer::fit(&vars);
    let closes: Vec<f64> = rows.iter().map(|r| r.close_norm).collect();
    let target = TargetScale::fit(&closes);

    let hist = history_len(mode, config.seq_len);
    let first = range.start + hist - 1;
    let anchors: Vec<usize> = (first..range.end.saturating_sub(HORIZON)).collect();
    if anchors.is_empty() {
        return Err(Error::InsufficientData(format!("{} rows cannot form a training window", rows.len())));
    }
    let mut samples = Vec::with_capacity(anchors.len());
    for &a in &anchors {
        let seq = build_sequence(frame, &inputs, mode, config.seq_len, a)?;
        let y: Vec<f64> = (1..=HORIZON).map(|h| target.forward(frame.rows()[a + h].close_norm)).collect();
        samples.push((seq, y));
    }

    let mut params = LstmParams::<f64>::init(INPUT_WIDTH, config.hidden, HORIZON, config.seed);
    let mut adam = AdamState::new(params.flat.len());
    let mut rng = SplitMix64::fork(config.seed, 1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut max_update: f64 = 0.0;
    let cap = config.learning_rate * config.clip;
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut g = vec![0.0; params.flat.len()];
            for &i in batch {
                let (l, gi) = loss_and_grad(&params, &samples[i].0, &samples[i].1)?;
                epoch_loss += l;
                g.iter_mut().zip(&gi).for_each(|(a, b)| *a += b);
            }
            let nb = batch.len() as f64;
            g.iter_mut().for_each(|v| *v /= nb);
            clip_norm(&mut g, config.clip);
            let step = adam_step(&mut params.flat, &g, &mut adam, config, Some(cap))?;
            max_update = max_update.max(step);
        }
        loss_curve.push(epoch_loss / samples.len() as f64);
    }
    Ok(TrainedLstm { model: LstmModel { config: *config, mode, params, inputs, target }, loss_curve, max_update_norm: max_update })
}

/// `epoch,loss` with epochs numbered from 1.
pub fn loss_curve_csv(curve: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (e, l) in curve.iter().enumerate() {
        s.push_str(&format!("{},{l}\n", e + 1));
    }
    s
}

impl Forecaster for LstmModel {
    fn id(&self) -> String {
        "lstm".to_string()
    }

    fn task(&self) -> Task {
        Task::Regress
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn predict_window(&self, frame: &FeatureFrame, mode: Mode, window: &ForecastWindow) -> Result<Vec<f64>> {
        if mode != self.mode {
            return Err(Error::Domain(format!("model trained for {} mode", self.mode)));
        }
        let anchor = window.anchor.ok_or_else(|| Error::InsufficientData("window has no anchor".into()))?;
        let mut out = self.forecast(frame, anchor)?;
        out.truncate(window.targets.len());
        Ok(out)
    }
}
