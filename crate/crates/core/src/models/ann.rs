//! One-hidden-layer perceptron (tanh hidden units) trained by full-batch
//! gradient descent. Classification uses a sigmoid output with cross-entropy,
//! regression a linear output with half mean squared error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Task;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ann {
    pub task: Task,
    pub inputs: usize,
    pub hidden: usize,
    /// `hidden × inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AnnParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub iterations: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Ann {
    fn init(task: Task, inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let a1 = 1.0 / (inputs.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..hidden * inputs).map(|_| rng.uniform(-a1, a1)).collect();
        let w2 = (0..hidden).map(|_| rng.uniform(-a2, a2)).collect();
        Self { task, inputs, hidden, w1, b1: vec![0.0; hidden], w2, b2: 0.0 }
    }

    fn hidden_layer(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let w = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                (self.b1[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).tanh()
            })
            .collect()
    }

    /// Pre-activation of the output unit.
    pub fn raw_output(&self, x: &[f64]) -> f64 {
        let h = self.hidden_layer(x);
        self.b2 + h.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Mean loss over the batch and its gradient, laid out as `(w1, b1, w2, b2)`.
    pub fn loss_and_grad(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Ann) {
        let mut g = Ann {
            task: self.task,
            inputs: self.inputs,
            hidden: self.hidden,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden],
            b2: 0.0,
        };
        let n = x.len() as f64;
        let mut loss = 0.0;
        for (row, &t) in x.iter().zip(y) {
            let h = self.hidden_layer(row);
            let z = self.b2 + h.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>();
            let dz = match self.task {
                Task::Classify => {
                    let p = sigmoid(z);
                    // log(1 + e^z) − t·z, stable for large |z|
                    loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
                    p - t
                }
                Task::Regress => {
                    loss += 0.5 * (z - t) * (z - t);
                    z - t
                }
            };
            g.b2 += dz / n;
            for j in 0..self.hidden {
                g.w2[j] += dz * h[j] / n;
                let dpre = dz * self.w2[j] * (1.0 - h[j] * h[j]) / n;
                g.b1[j] += dpre;
                for (gw, xi) in g.w1[j * self.inputs..(j + 1) * self.inputs].iter_mut().zip(row) {
                    *gw += dpre * xi;
                }
            }
        }
        (loss / n, g)
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], task: Task, params: AnnParams, seed: u64) -> Result<Self> {
        let mut net = Self::init(task, x[0].len(), params.hidden, seed);
        for _ in 0..params.iterations {
            let (_, g) = net.loss_and_grad(x, y);
            let lr = params.learning_rate;
            net.w1.iter_mut().zip(&g.w1).for_each(|(w, d)| *w -= lr * d);
            net.b1.iter_mut().zip(&g.b1).for_each(|(w, d)| *w -= lr * d);
            net.w2.iter_mut().zip(&g.w2).for_each(|(w, d)| *w -= lr * d);
            net.b2 -= lr * g.b2;
        }
        if !net.b2.is_finite() || !net.w2.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("network weights diverged".into()));
        }
        Ok(net)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let z = self.raw_output(x);
        match self.task {
            Task::Regress => z,
            Task::Classify => {
                if sigmoid(z) > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}
