//! RBF-kernel support vector machines trained by dual coordinate descent.
//!
//! The bias is absorbed into the kernel (`K + 1`), which removes the equality
//! constraint from the dual and lets every coordinate move independently.
//! Regression uses the ε-insensitive loss with one signed coefficient per row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub task: Task,
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    /// `α_i y_i` (classify) or `β_i` (regress) for each support row.
    pub coef: Vec<f64>,
    /// Sweeps performed and whether the tolerance was met.
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()).exp()
}

impl Svm {
    pub fn fit(x: &[Vec<f64>], y: &[f64], task: Task, p: SvmParams) -> Result<Self> {
        let n = x.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = rbf(&x[i], &x[j], p.gamma) + 1.0;
                q[i * n + j] = k;
                q[j * n + i] = k;
            }
        }
        let signs: Vec<f64> = match task {
            Task::Classify => y.iter().map(|&t| if t > 0.5 { 1.0 } else { -1.0 }).collect(),
            Task::Regress => vec![1.0; n],
        };
        // coef holds α_i y_i or β_i; f[i] = Σ_j coef_j Q_ij is kept current.
        let mut coef = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < p.max_sweeps {
            sweeps += 1;
            let mut worst = 0.0f64;
            for i in 0..n {
                let qii = q[i * n + i];
                let new = match task {
                    Task::Classify => {
                        let alpha = coef[i] * signs[i];
                        let g = signs[i] * f[i] - 1.0;
                        let pg = if alpha <= 0.0 {
                            g.min(0.0)
                        } else if alpha >= p.c {
                            g.max(0.0)
                        } else {
                            g
                        };
                        worst = worst.max(pg.abs());
                        (alpha - g / qii).clamp(0.0, p.c) * signs[i]
                    }
                    Task::Regress => {
                        let z = coef[i] - (f[i] - y[i]) / qii;
                        let shrunk = z.signum() * (z.abs() - p.epsilon / qii).max(0.0);
                        let b = shrunk.clamp(-p.c, p.c);
                        worst = worst.max(((b - coef[i]) * qii).abs());
                        b
                    }
                };
                let delta = new - coef[i];
                if delta != 0.0 {
                    coef[i] = new;
                    let row = &q[i * n..(i + 1) * n];
                    for (fj, qij) in f.iter_mut().zip(row) {
                        *fj += delta * qij;
                    }
                }
            }
            if worst < p.tol {
                converged = true;
                break;
            }
        }
        if !coef.iter().all(|c| c.is_finite()) {
            return Err(Error::Numeric("svm dual diverged".into()));
        }
        let (support, coef): (Vec<Vec<f64>>, Vec<f64>) =
            x.iter().cloned().zip(coef).filter(|(_, c)| *c != 0.0).unzip();
        Ok(Self { task, gamma: p.gamma, support, coef, sweeps, converged })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support.iter().zip(&self.coef).map(|(s, c)| c * (rbf(s, x, self.gamma) + 1.0)).sum()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let d = self.decision(x);
        match self.task {
            Task::Regress => d,
            Task::Classify => {
                if d > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SvmParams {
        SvmParams { c: 1.0, gamma: 0.5, epsilon: 0.1, tol: 1e-3, max_sweeps: 10_000 }
    }

    #[test]
    fn separates_two_clusters() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { -2.0 } else { 2.0 } + 0.01 * i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let m = Svm::fit(&x, &y, Task::Classify, params()).unwrap();
        assert!(m.converged);
        for (r, t) in x.iter().zip(&y) {
            assert_eq!(m.predict(r), *t);
        }
    }

    #[test]
    fn regression_residuals_within_tube_or_bounded() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin()).collect();
        let m = Svm::fit(&x, &y, Task::Regress, params()).unwrap();
        assert!(m.converged);
        for (r, t) in x.iter().zip(&y) {
            let resid = (m.predict(r) - t).abs();
            assert!(resid < 0.1 + 0.05, "residual {resid}");
        }
    }
}
